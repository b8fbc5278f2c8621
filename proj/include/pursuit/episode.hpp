#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pursuit/belief.hpp"
#include "pursuit/grid.hpp"
#include "pursuit/odor.hpp"
#include "pursuit/policy.hpp"
#include "pursuit/rng.hpp"
#include "pursuit/target.hpp"

namespace pursuit {

// One pursuit episode: initialization from a first detection, the
// predict / act / move / observe / update loop, and seeded batches whose
// results are independent of the number of worker threads.

enum class Environment : std::uint8_t { discrete, continuous };

struct EpisodeConfig {
    Environment environment = Environment::discrete;
    GridSpec grid{51, 1.0};

    // odor model; kappa is implied by lambda^2 = kappa tau_d
    double lambda = 3.0;
    double emission_rate = 1.0;
    double tau_d = 9.0;
    double sensing_dt = 1.0;
    double detection_radius = 0.0; // continuous sensing; 0 means the spacing

    DiscreteRTParams discrete_target{0.96};
    ContinuousRTParams continuous_target{};
    double prewarm_decay_times = 5.0; // cloud pre-warm duration in units of tau_d

    PolicySpec policy{};
    std::uint64_t max_steps = 0; // 0 resolves to 20 L^2
    std::uint64_t seed = 1;
    bool record_actions = false;

    std::uint64_t resolved_max_steps() const {
        return max_steps ? max_steps
                         : 20ull * static_cast<std::uint64_t>(grid.side) * grid.side;
    }
    double resolved_detection_radius() const {
        return detection_radius > 0.0 ? detection_radius : grid.spacing;
    }
    void validate() const {
        policy.validate();
        if (environment == Environment::continuous) continuous_target.validate(sensing_dt);
        if (resolved_max_steps() < 1) throw std::invalid_argument("EpisodeConfig: max_steps < 1");
    }
};

// Immutable per-experiment assets shared by all episodes of a batch.
struct EpisodeResources {
    DetectionModel model;
    LikelihoodField belief_field;
    TransitionMatrix transition;
    std::vector<double> invariant_velocity;
    std::optional<QTable> qtable;
};

// Builds the assets for a config. The continuous environment requires a
// calibrated 9-state matrix; the Q-table may be injected from a cache, else
// it is solved here when the policy needs it (gamma 0.95, residual 1e-9).
inline EpisodeResources make_resources(const EpisodeConfig& cfg,
                                       std::optional<TransitionMatrix> empirical = std::nullopt,
                                       std::optional<QTable> cached = std::nullopt) {
    cfg.validate();
    DetectionModel model = DetectionModel::from_length_scale(cfg.grid, cfg.lambda,
                                                             cfg.emission_rate, cfg.tau_d,
                                                             cfg.sensing_dt);
    LikelihoodField field;
    TransitionMatrix transition = [&] {
        if (cfg.environment == Environment::discrete) {
            field = model.bernoulli_field();
            return discrete_transition_matrix(cfg.discrete_target);
        }
        field = model.quasi_static_field();
        if (!empirical)
            throw std::invalid_argument(
                "make_resources: continuous environment needs a calibrated transition matrix");
        if (empirical->alphabet_kind() != AlphabetKind::moore9)
            throw std::invalid_argument("make_resources: calibrated matrix must be 9-state");
        return *std::move(empirical);
    }();
    std::vector<double> q = cfg.environment == Environment::discrete
                                ? discrete_invariant_distribution(cfg.discrete_target)
                                : invariant_distribution(transition);
    std::optional<QTable> qtable = std::move(cached);
    if (qtable) {
        if (qtable->p_hash != transition_matrix_hash(transition))
            throw std::invalid_argument("make_resources: cached Q-table is stale");
    } else if (cfg.policy.needs_qtable()) {
        qtable = value_iteration(transition, cfg.grid, 0.95, 1e-9);
    }
    return {std::move(model), std::move(field), std::move(transition), std::move(q),
            std::move(qtable)};
}

enum class Outcome : std::uint8_t { captured, truncated, belief_collapsed };

struct EpisodeRecord {
    std::uint64_t search_time = 0;
    Outcome outcome = Outcome::truncated;
    std::uint64_t seed = 0;
    std::uint64_t n_detections = 0; // detections during the search, after t = 0
    double final_distance = 0.0;    // true torus distance at termination
    std::uint32_t collapses = 0;
    std::vector<std::uint8_t> actions; // only when record_actions
};

// Samples a cell from the position marginal of a belief with one draw.
inline LatticePoint sample_position_marginal(const Belief& b, Rng& rng) {
    double pick = rng.u01() * b.total();
    double acc = 0.0;
    const int cells = b.cells();
    for (int pos = 0; pos < cells; ++pos) {
        for (int u = 0; u < b.num_vel(); ++u) acc += b.at(pos, u);
        if (pick < acc) return point_from_index(pos, b.grid());
    }
    return point_from_index(cells - 1, b.grid());
}

inline int sample_categorical(std::span<const double> w, Rng& rng) {
    double pick = rng.u01();
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        acc += w[k];
        if (pick < acc) return static_cast<int>(k);
    }
    return static_cast<int>(w.size()) - 1;
}

// Debug hook invoked after every completed step (post update).
using StepObserver =
    std::function<void(std::uint64_t step, const Belief&, LatticePoint agent, Observation)>;

inline EpisodeRecord run_episode(const EpisodeConfig& cfg, const EpisodeResources& res,
                                 const StepObserver* observer = nullptr) {
    cfg.validate();
    const GridSpec& g = cfg.grid;
    const bool discrete = cfg.environment == Environment::discrete;
    const bool uses_belief = cfg.policy.kind != PolicySpec::Kind::random;
    if (cfg.policy.needs_qtable() && !res.qtable)
        throw std::invalid_argument("run_episode: policy needs a Q-table");

    Rng env(derive_seed(cfg.seed, 0, Stream::env));
    Rng pol(derive_seed(cfg.seed, 0, Stream::policy));

    EpisodeRecord rec;
    rec.seed = cfg.seed;

    LatticePoint agent{g.side / 2, g.side / 2};
    Belief belief = initial_belief(agent, res.belief_field, res.invariant_velocity, g);

    // the true target starts from the same distribution the belief encodes
    LatticePoint start_cell = sample_position_marginal(belief, env);
    DiscreteTargetState dtarget{start_cell, 0};
    ContinuousTargetState ctarget;
    ParticleCloud cloud(g);
    if (discrete) {
        dtarget.velocity = sample_categorical(res.invariant_velocity, env);
    } else {
        double tx = (start_cell.i + env.u01()) * g.spacing;
        double ty = (start_cell.j + env.u01()) * g.spacing;
        double heading = 2.0 * std::numbers::pi * env.u01();
        ctarget = make_continuous_state(tx, ty, heading, 0.0, cfg.continuous_target, env);
        cloud = prewarm_cloud(ctarget, cfg.continuous_target, CloudParams(res.model), g,
                              cfg.prewarm_decay_times * cfg.tau_d, env);
    }

    const std::uint64_t max_steps = cfg.resolved_max_steps();
    const double period = g.side * g.spacing;
    const double capture_dist = std::sqrt(2.0) * g.spacing;
    auto continuous_distance = [&] {
        double ax = (agent.i + 0.5) * g.spacing;
        double ay = (agent.j + 0.5) * g.spacing;
        return std::hypot(torus_delta(ctarget.x, ax, period), torus_delta(ctarget.y, ay, period));
    };

    std::vector<double> scratch;
    Belief predicted(g, belief.alphabet().kind());
    EntropyWorkspace ws;
    PiecewisePath path;
    std::optional<Action> prev_action;
    bool captured = false;

    std::uint64_t t = 0;
    while (t < max_steps) {
        ++t;
        if (uses_belief) {
            predict_into(belief, res.transition, predicted, scratch);
            std::swap(belief, predicted);
        }

        Action action;
        switch (cfg.policy.kind) {
            case PolicySpec::Kind::infotaxis:
                action = select_action_infotaxis(belief, agent, res.belief_field, pol, ws);
                break;
            case PolicySpec::Kind::greedy:
                action = select_action_hybrid(belief, agent, 1.0, &*res.qtable, res.belief_field,
                                              pol, ws);
                break;
            case PolicySpec::Kind::hybrid:
                action = select_action_hybrid(belief, agent, cfg.policy.w,
                                              res.qtable ? &*res.qtable : nullptr,
                                              res.belief_field, pol, ws);
                break;
            case PolicySpec::Kind::random:
                action = select_action_random(prev_action, cfg.policy.alpha, pol);
                break;
        }
        prev_action = action;
        if (cfg.record_actions) rec.actions.push_back(static_cast<std::uint8_t>(action));

        // agent and target move simultaneously; capture is checked once after both
        agent = apply_action(agent, action, g);
        if (discrete) {
            dtarget = step_discrete(dtarget, res.transition, g, env);
            if (within_capture(min_image(agent, dtarget.position, g))) captured = true;
        } else {
            step_continuous(ctarget, cfg.continuous_target, cfg.sensing_dt, g, env, &path);
            cloud.evolve(path, CloudParams(res.model), cfg.sensing_dt,
                         cfg.continuous_target.cloud_dt, env);
            if (continuous_distance() <= capture_dist) captured = true;
        }
        if (captured) break;

        Observation obs;
        if (discrete) {
            obs = sample_observation_discrete(agent, dtarget.position, res.model, g, env);
        } else {
            obs = sample_observation_continuous(agent, cloud, cfg.resolved_detection_radius(), g);
        }
        if (obs == Observation::detection) ++rec.n_detections;

        if (uses_belief) {
            ZeroCaptureResult zr = zero_capture_and_renormalize(belief, agent);
            if (zr.collapsed) {
                reinitialize_uniform(belief, agent, res.invariant_velocity);
                ++rec.collapses;
            }
            bayes_update(belief, obs, agent, res.belief_field);
        }
        if (observer) (*observer)(t, belief, agent, obs);
    }

    rec.search_time = captured ? t : max_steps;
    if (captured)
        rec.outcome = Outcome::captured;
    else
        rec.outcome = rec.collapses > 0 ? Outcome::belief_collapsed : Outcome::truncated;
    rec.final_distance =
        discrete ? std::sqrt(static_cast<double>(
                       min_image(agent, dtarget.position, g).norm_sq_cells())) *
                       g.spacing
                 : continuous_distance();
    return rec;
}

struct BatchStats {
    double mean_search_time = 0.0; // truncated episodes counted at max_steps
    double stderr_search_time = 0.0;
    double capture_fraction = 0.0;
    std::uint64_t episodes = 0;
    // P(search time > T): truncated episodes exceed every finite T, so the
    // value at T = max_steps equals the truncation fraction
    std::vector<std::pair<std::uint64_t, double>> ccdf;
};

inline BatchStats summarize(const std::vector<EpisodeRecord>& records, std::uint64_t max_steps) {
    BatchStats s;
    s.episodes = records.size();
    if (records.empty()) return s;
    double sum = 0.0, sum2 = 0.0;
    std::uint64_t captured = 0;
    std::vector<std::uint64_t> times;
    times.reserve(records.size());
    for (const auto& r : records) {
        double t = static_cast<double>(r.outcome == Outcome::captured ? r.search_time : max_steps);
        sum += t;
        sum2 += t * t;
        if (r.outcome == Outcome::captured) {
            ++captured;
            times.push_back(r.search_time);
        }
    }
    const double n = static_cast<double>(records.size());
    s.mean_search_time = sum / n;
    if (records.size() > 1) {
        double var = std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0));
        s.stderr_search_time = std::sqrt(var / n);
    }
    s.capture_fraction = static_cast<double>(captured) / n;

    std::sort(times.begin(), times.end());
    s.ccdf.emplace_back(0, 1.0);
    const std::uint64_t exceeders_forever = records.size() - captured;
    for (std::size_t k = 0; k < times.size();) {
        std::size_t j = k;
        while (j < times.size() && times[j] == times[k]) ++j;
        double above = static_cast<double>(times.size() - j + exceeders_forever) / n;
        s.ccdf.emplace_back(times[k], above);
        k = j;
    }
    if (exceeders_forever > 0)
        s.ccdf.emplace_back(max_steps, static_cast<double>(exceeders_forever) / n);
    return s;
}

struct BatchResult {
    std::vector<EpisodeRecord> records;
    BatchStats stats;
};

// Episode i always runs with seed f(master_seed, i), so the set of records is
// a pure function of (config, master_seed) whatever the thread count.
inline BatchResult run_batch(const EpisodeConfig& cfg, const EpisodeResources& res,
                             std::uint64_t n_episodes, std::uint64_t master_seed, int jobs = 0) {
    if (n_episodes < 1) throw std::invalid_argument("run_batch: need at least one episode");
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(n_episodes)));

    std::vector<EpisodeRecord> records(n_episodes);
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::uint64_t i = next.fetch_add(1);
            if (i >= n_episodes) return;
            EpisodeConfig ec = cfg;
            ec.seed = derive_seed(master_seed, i, Stream::episode);
            records[i] = run_episode(ec, res);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    BatchStats stats = summarize(records, cfg.resolved_max_steps());
    return {std::move(records), std::move(stats)};
}

} // namespace pursuit
