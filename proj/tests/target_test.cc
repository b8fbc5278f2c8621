#include "pursuit/target.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <vector>

#include "pursuit/io.hpp"

namespace pursuit {
namespace {

TEST(DiscreteRTParamsTest, validates_epsilon) {
    EXPECT_THROW(DiscreteRTParams(0.0), std::invalid_argument);
    EXPECT_THROW(DiscreteRTParams(1.0), std::invalid_argument);
    EXPECT_NEAR(DiscreteRTParams::from_persistence(25.0).epsilon, 0.96, 1e-15);
    EXPECT_NEAR(DiscreteRTParams(0.96).persistence_time(), 25.0, 1e-12);
    EXPECT_NEAR(DiscreteRTParams(0.96).rest_time(), 1.0 / 0.96, 1e-15);
}

TEST(DiscreteChainTest, entries_at_tau25) {
    TransitionMatrix P = discrete_transition_matrix(DiscreteRTParams(0.96));
    for (int u = 0; u < 4; ++u) {
        EXPECT_DOUBLE_EQ(P.prob(u, u), 0.96);
        EXPECT_NEAR(P.prob(4, u), 0.04, 1e-15);
        EXPECT_DOUBLE_EQ(P.prob(u, 4), 0.24);
        for (int v = 0; v < 4; ++v)
            if (v != u) EXPECT_DOUBLE_EQ(P.prob(v, u), 0.0);
    }
    EXPECT_NEAR(P.prob(4, 4), 0.04, 1e-15);
}

TEST(DiscreteChainTest, stationarity_for_various_epsilon) {
    for (double eps : {0.1, 0.5, 0.8, 0.96, 0.999}) {
        TransitionMatrix P = discrete_transition_matrix(DiscreteRTParams(eps));
        std::vector<double> q = discrete_invariant_distribution(DiscreteRTParams(eps));
        for (int to = 0; to < 5; ++to) {
            double acc = 0.0;
            for (int from = 0; from < 5; ++from) acc += P.prob(to, from) * q[from];
            EXPECT_NEAR(acc, q[to], 1e-12);
        }
    }
}

TEST(DiscreteChainTest, small_epsilon_concentrates_on_rest) {
    auto q = invariant_distribution(discrete_transition_matrix(DiscreteRTParams(1e-6)));
    EXPECT_GT(q[4], 0.999996);
}

TEST(TransitionMatrixTest, rejects_bad_input) {
    std::vector<double> p(25, 0.2);
    EXPECT_NO_THROW(TransitionMatrix(AlphabetKind::cardinal5, p));
    p[0] = -0.1;
    p[5] = 0.5;
    EXPECT_THROW(TransitionMatrix(AlphabetKind::cardinal5, p), std::invalid_argument);
    std::vector<double> wrong(10, 0.1);
    EXPECT_THROW(TransitionMatrix(AlphabetKind::cardinal5, wrong), std::invalid_argument);
    std::vector<double> offsum(25, 0.2);
    offsum[0] = 0.21;
    EXPECT_THROW(TransitionMatrix(AlphabetKind::cardinal5, offsum), std::invalid_argument);
}

TEST(StepDiscreteTest, position_uses_velocity_before_resampling) {
    GridSpec g(51, 1.0);
    TransitionMatrix P = discrete_transition_matrix(DiscreteRTParams(0.5));
    Rng rng(5);
    for (int k = 0; k < 100; ++k) {
        DiscreteTargetState s{{10, 10}, 0}; // +e1
        DiscreteTargetState next = step_discrete(s, P, g, rng);
        EXPECT_EQ(next.position, (LatticePoint{11, 10}));
    }
    for (int k = 0; k < 100; ++k) {
        DiscreteTargetState rest{{10, 10}, 4};
        EXPECT_EQ(step_discrete(rest, P, g, rng).position, (LatticePoint{10, 10}));
    }
}

TEST(StepDiscreteTest, empirical_persistence_matches_tau_p) {
    GridSpec g(51, 1.0);
    TransitionMatrix P = discrete_transition_matrix(DiscreteRTParams(0.96));
    Rng rng(20240601);
    DiscreteTargetState s{{0, 0}, 4};
    std::uint64_t steps_moving = 0, runs = 0;
    int prev = 4;
    for (std::uint64_t k = 0; k < 1000000; ++k) {
        s = step_discrete(s, P, g, rng);
        if (s.velocity < 4) {
            ++steps_moving;
            if (prev != s.velocity) ++runs; // entering a run (direction changes require rest between)
        }
        prev = s.velocity;
    }
    double mean_run = static_cast<double>(steps_moving) / static_cast<double>(runs);
    EXPECT_NEAR(mean_run, 25.0, 0.5);
}

TEST(StepDiscreteTest, run_lengths_are_geometric) {
    GridSpec g(9, 1.0);
    const double eps = 0.8;
    TransitionMatrix P = discrete_transition_matrix(DiscreteRTParams(eps));
    Rng rng(99);
    DiscreteTargetState s{{0, 0}, 4};
    std::vector<std::uint64_t> lens;
    std::uint64_t current = 0;
    while (lens.size() < 20000) {
        s = step_discrete(s, P, g, rng);
        if (s.velocity < 4) {
            ++current;
        } else if (current > 0) {
            lens.push_back(current);
            current = 0;
        }
    }
    // chi^2 against geometric(1-eps) with bins 1..15 and a tail bin
    const int kbins = 15;
    std::vector<double> observed(kbins + 1, 0.0);
    for (auto len : lens) {
        if (len <= kbins)
            observed[len - 1] += 1.0;
        else
            observed[kbins] += 1.0;
    }
    double n = static_cast<double>(lens.size());
    double chi2 = 0.0;
    double tail = 1.0;
    for (int k = 1; k <= kbins; ++k) {
        double pk = std::pow(eps, k - 1) * (1.0 - eps);
        tail -= pk;
        double e = n * pk;
        chi2 += (observed[k - 1] - e) * (observed[k - 1] - e) / e;
    }
    chi2 += (observed[kbins] - n * tail) * (observed[kbins] - n * tail) / (n * tail);
    EXPECT_LT(chi2, 30.58); // 1% critical value, 15 dof
}

TEST(StepContinuousTest, ballistic_limit_is_exact) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 1e15, 0.1};
    Rng rng(3);
    ContinuousTargetState s{10.0, 10.0, 0.0, 0.0, 1e14};
    step_continuous(s, p, 1.0, g, rng);
    EXPECT_NEAR(s.x, 11.0, 1e-12);
    EXPECT_NEAR(s.y, 10.0, 1e-12);
}

TEST(StepContinuousTest, speed_is_conserved_along_the_path) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.7, 0.8, 0.1};
    Rng rng(4);
    ContinuousTargetState s = make_continuous_state(25.0, 25.0, 1.0, 0.0, p, rng);
    PiecewisePath path;
    for (int k = 0; k < 50; ++k) {
        step_continuous(s, p, 1.0, g, rng, &path);
        double len = 0.0;
        for (std::size_t i = 1; i < path.t.size(); ++i)
            len += std::hypot(path.x[i] - path.x[i - 1], path.y[i] - path.y[i - 1]);
        EXPECT_NEAR(len, p.speed * 1.0, 1e-9);
    }
}

TEST(StepContinuousTest, tumble_counts_are_poisson) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 0.5, 0.01};
    Rng rng(77);
    ContinuousTargetState s = make_continuous_state(25.0, 25.0, 0.0, 0.0, p, rng);
    PiecewisePath path;
    const int windows = 100000;
    const double horizon = 2.0;
    const double lam = horizon / p.mean_run; // 4 expected per window
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < windows; ++k) {
        step_continuous(s, p, horizon, g, rng, &path);
        double c = static_cast<double>(path.t.size() - 2);
        sum += c;
        sum2 += c * c;
    }
    double mean = sum / windows;
    double var = sum2 / windows - mean * mean;
    EXPECT_NEAR(mean, lam, 3.0 * std::sqrt(lam / windows));
    EXPECT_NEAR(var / mean, 1.0, 0.02); // index of dispersion
}

TEST(StepContinuousTest, msd_crosses_from_ballistic_to_diffusive) {
    GridSpec g(201, 1.0);
    ContinuousRTParams p{1.0, 1.0, 0.1};
    Rng rng(123);
    PiecewisePath path;
    auto msd = [&](double T, int trials) {
        double acc = 0.0;
        for (int k = 0; k < trials; ++k) {
            ContinuousTargetState s =
                make_continuous_state(100.0, 100.0, 2.0 * std::numbers::pi * rng.u01(), 0.0, p, rng);
            step_continuous(s, p, T, g, rng, &path);
            double dx = path.x.back() - path.x.front();
            double dy = path.y.back() - path.y.front();
            acc += dx * dx + dy * dy;
        }
        return acc / trials;
    };
    double short_T = 0.1;
    EXPECT_NEAR(msd(short_T, 4000) / (short_T * short_T), 1.0, 0.1); // ~U^2 T^2
    double long_T = 100.0;
    double diffusive = 2.0 * p.speed * p.speed * p.mean_run * long_T; // 4 D T, D = U^2 tau / 2
    double ratio = msd(long_T, 4000) / diffusive;
    EXPECT_GT(ratio, 0.8);
    EXPECT_LT(ratio, 1.25);
}

TEST(EstimateDiscretizedTest, axis_aligned_ballistic_counts_concentrate) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 1e18, 0.1};
    Rng rng(8);
    auto counts = count_discretized_transitions(p, g, 100000ULL, rng, 1.0, 0.0);
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    EXPECT_EQ(counts[0], total); // every transition is (+1,0) -> (+1,0)
}

TEST(EstimateDiscretizedTest, self_transition_dominates_each_column_at_high_persistence) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 50.0, 0.1};
    Rng rng(8);
    TransitionMatrix P = estimate_discretized_transition(p, g, 2000000ULL, rng);
    for (int u = 0; u < 4; ++u) {
        EXPECT_GT(P.prob(u, u), 0.4);
        for (int v = 0; v < 9; ++v)
            if (v != u) EXPECT_LT(P.prob(v, u), P.prob(u, u));
    }
}

TEST(EstimateDiscretizedTest, strict_ballistic_fails_loudly) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 1e18, 0.1};
    Rng rng(9);
    // an axis-aligned straight run never visits the diagonal or rest states
    EXPECT_THROW(estimate_discretized_transition(p, g, 1000000ULL, rng, 1.0, 0.0),
                 std::runtime_error);
}

TEST(EstimateDiscretizedTest, exactly_d4_invariant_and_column_stochastic) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 1.0, 0.1};
    Rng rng(10);
    TransitionMatrix P = estimate_discretized_transition(p, g, 1000000ULL, rng);
    VelocityAlphabet a(AlphabetKind::moore9);
    for (int gi = 0; gi < kD4Order; ++gi)
        for (int to = 0; to < 9; ++to)
            for (int from = 0; from < 9; ++from)
                ASSERT_EQ(P.prob(a.d4_map(gi, to), a.d4_map(gi, from)), P.prob(to, from));
    for (int from = 0; from < 9; ++from) {
        double sum = 0.0;
        for (int to = 0; to < 9; ++to) sum += P.prob(to, from);
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    // the named symmetry example: P((0,1)|(1,0)) == P((-1,0)|(0,1))
    EXPECT_EQ(P.prob(2, 0), P.prob(1, 2));
}

TEST(EstimateDiscretizedTest, self_persistence_regression_at_unit_run_time) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 1.0, 0.1};
    Rng rng(42);
    TransitionMatrix P = estimate_discretized_transition(p, g, 2000000ULL, rng);
    // frozen from 1e7-step runs over seeds {101, 202, 303}: 0.2619(4)
    EXPECT_NEAR(P.prob(0, 0), 0.262, 0.004);
}

TEST(InvariantDistributionTest, discrete_chain_closed_form) {
    auto q = invariant_distribution(discrete_transition_matrix(DiscreteRTParams(0.5)));
    EXPECT_NEAR(q[0], 0.125, 1e-12);
    EXPECT_NEAR(q[1], 0.125, 1e-12);
    EXPECT_NEAR(q[2], 0.125, 1e-12);
    EXPECT_NEAR(q[3], 0.125, 1e-12);
    EXPECT_NEAR(q[4], 0.5, 1e-12);
}

TEST(InvariantDistributionTest, identity_matrix_is_reducible) {
    std::vector<double> id(25, 0.0);
    for (int k = 0; k < 5; ++k) id[k * 5 + k] = 1.0;
    TransitionMatrix P(AlphabetKind::cardinal5, std::move(id));
    EXPECT_THROW(invariant_distribution(P), std::runtime_error);
}

TEST(InvariantDistributionTest, empirical_matrix_gives_orbit_constant_q) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 1.0, 0.1};
    Rng rng(11);
    TransitionMatrix P = estimate_discretized_transition(p, g, 1000000ULL, rng);
    auto q = invariant_distribution(P);
    for (int u = 1; u < 4; ++u) EXPECT_NEAR(q[u], q[0], 1e-13);
    for (int u = 5; u < 8; ++u) EXPECT_NEAR(q[u], q[4], 1e-13);
    EXPECT_NE(q[0], q[4]);
    double total = 0.0;
    for (double v : q) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    // residual contract: q P = q to 1e-12
    for (int to = 0; to < 9; ++to) {
        double acc = 0.0;
        for (int from = 0; from < 9; ++from) acc += P.prob(to, from) * q[from];
        EXPECT_NEAR(acc, q[to], 1e-12);
    }
}

TEST(MatrixIOTest, text_roundtrip_is_exact) {
    GridSpec g(51, 1.0);
    ContinuousRTParams p{1.0, 1.0, 0.1};
    Rng rng(12);
    TransitionMatrix P = estimate_discretized_transition(p, g, 1000000ULL, rng);
    auto path = std::filesystem::temp_directory_path() / "pursuit_matrix_test.txt";
    save_transition_matrix(path.string(), P, {{"mean_run", "1.0"}, {"seed", "12"}});
    TransitionMatrix Q = load_transition_matrix(path.string());
    ASSERT_EQ(Q.alphabet_kind(), AlphabetKind::moore9);
    for (int to = 0; to < 9; ++to)
        for (int from = 0; from < 9; ++from) ASSERT_EQ(Q.prob(to, from), P.prob(to, from));
    std::filesystem::remove(path);

    TransitionMatrix P5 = discrete_transition_matrix(DiscreteRTParams(0.96));
    EXPECT_NE(transition_matrix_hash(P5), transition_matrix_hash(P));
}

} // namespace
} // namespace pursuit
