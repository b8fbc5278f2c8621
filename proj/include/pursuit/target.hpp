#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pursuit/grid.hpp"
#include "pursuit/rng.hpp"

namespace pursuit {

// Target dynamics: the 5-state discrete run-and-tumble Markov chain, the
// event-driven continuous run-and-tumble integrator, and the empirical
// 9-state lattice discretization of the continuous motion.

enum class AlphabetKind : std::uint8_t { cardinal5, moore9 };

// Fixed velocity alphabets. Ordering convention: the four cardinal steps
// first (east, west, north, south), then the four diagonals (moore9 only),
// rest state last.
class VelocityAlphabet {
  public:
    explicit VelocityAlphabet(AlphabetKind kind) : kind_(kind) {}

    AlphabetKind kind() const { return kind_; }
    int size() const { return kind_ == AlphabetKind::cardinal5 ? 5 : 9; }
    int rest_index() const { return size() - 1; }

    Displacement displacement(int u) const {
        static constexpr std::array<Displacement, 9> moore = {
            Displacement{1, 0},  Displacement{-1, 0}, Displacement{0, 1},
            Displacement{0, -1}, Displacement{1, 1},  Displacement{-1, 1},
            Displacement{1, -1}, Displacement{-1, -1}, Displacement{0, 0}};
        if (u < 0 || u >= size()) throw std::out_of_range("VelocityAlphabet: bad index");
        if (kind_ == AlphabetKind::cardinal5) return u == 4 ? Displacement{0, 0} : moore[u];
        return moore[u];
    }

    // Index of a displacement in the alphabet; nullopt if it does not belong.
    std::optional<int> index(Displacement d) const {
        for (int u = 0; u < size(); ++u)
            if (displacement(u) == d) return u;
        return std::nullopt;
    }

    // Alphabet index of g.u for g in D4; both alphabets are closed under D4.
    int d4_map(int g, int u) const {
        auto idx = index(d4_apply(g, displacement(u)));
        if (!idx) throw std::logic_error("VelocityAlphabet: D4 image escaped the alphabet");
        return *idx;
    }

    friend bool operator==(const VelocityAlphabet&, const VelocityAlphabet&) = default;

  private:
    AlphabetKind kind_;
};

// Conditional law of the next target velocity given the current one.
// Storage is p[to * n + from]; each column (fixed `from`) sums to one.
class TransitionMatrix {
  public:
    TransitionMatrix(AlphabetKind kind, std::vector<double> probs)
        : alphabet_(kind), p_(std::move(probs)) {
        int n = alphabet_.size();
        if (p_.size() != static_cast<std::size_t>(n) * n)
            throw std::invalid_argument("TransitionMatrix: size does not match alphabet");
        for (int from = 0; from < n; ++from) {
            double sum = 0.0;
            for (int to = 0; to < n; ++to) {
                double v = prob(to, from);
                if (v < 0.0) throw std::invalid_argument("TransitionMatrix: negative entry");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("TransitionMatrix: column " + std::to_string(from) +
                                            " sums to " + std::to_string(sum));
        }
    }

    const VelocityAlphabet& alphabet() const { return alphabet_; }
    AlphabetKind alphabet_kind() const { return alphabet_.kind(); }
    int size() const { return alphabet_.size(); }
    double prob(int to, int from) const { return p_[static_cast<std::size_t>(to) * size() + from]; }
    std::span<const double> data() const { return p_; }

    int sample_next(int from, Rng& rng) const {
        double u = rng.u01();
        double acc = 0.0;
        int n = size();
        for (int to = 0; to < n; ++to) {
            acc += prob(to, from);
            if (u < acc) return to;
        }
        return n - 1; // guards rounding in the cumulative sum
    }

  private:
    VelocityAlphabet alphabet_;
    std::vector<double> p_;
};

struct DiscreteRTParams {
    double epsilon;

    explicit DiscreteRTParams(double eps) : epsilon(eps) {
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("DiscreteRTParams: epsilon must lie in (0,1)");
    }
    static DiscreteRTParams from_persistence(double tau_p) {
        if (!(tau_p > 1.0))
            throw std::invalid_argument("DiscreteRTParams: persistence time must exceed 1");
        return DiscreteRTParams(1.0 - 1.0 / tau_p);
    }

    double persistence_time() const { return 1.0 / (1.0 - epsilon); }
    double rest_time() const { return 1.0 / epsilon; }
};

// Moving states persist with probability eps and stop otherwise; the rest
// state launches in each cardinal direction with probability eps/4.
inline TransitionMatrix discrete_transition_matrix(DiscreteRTParams params) {
    const double eps = params.epsilon;
    const int n = 5;
    std::vector<double> p(n * n, 0.0);
    auto at = [&](int to, int from) -> double& { return p[to * n + from]; };
    for (int from = 0; from < 4; ++from) {
        at(from, from) = eps;
        at(4, from) = 1.0 - eps;
    }
    for (int to = 0; to < 4; ++to) at(to, 4) = eps / 4.0;
    at(4, 4) = 1.0 - eps;
    return TransitionMatrix(AlphabetKind::cardinal5, std::move(p));
}

// Stationary velocity distribution of the discrete chain in closed form.
inline std::vector<double> discrete_invariant_distribution(DiscreteRTParams params) {
    const double eps = params.epsilon;
    return {eps / 4.0, eps / 4.0, eps / 4.0, eps / 4.0, 1.0 - eps};
}

struct DiscreteTargetState {
    LatticePoint position;
    int velocity; // alphabet index
};

// One time step: the position advances with the current velocity, then the
// velocity resamples, matching X_s(t+1) = X_s(t) + U_s(t).
inline DiscreteTargetState step_discrete(DiscreteTargetState s, const TransitionMatrix& P,
                                         const GridSpec& g, Rng& rng) {
    Displacement u = P.alphabet().displacement(s.velocity);
    LatticePoint next = wrap(s.position.i + u.di, s.position.j + u.dj, g);
    return {next, P.sample_next(s.velocity, rng)};
}

// ---------------------------------------------------------------------------
// Continuous run-and-tumble

struct ContinuousRTParams {
    double speed = 1.0;    // U
    double mean_run = 1.0; // mean time between tumbles
    double cloud_dt = 0.1; // substep for odor emission scheduling

    void validate(double sensing_dt = 1.0) const {
        if (!(speed > 0.0)) throw std::invalid_argument("ContinuousRTParams: speed must be > 0");
        if (!(mean_run > 0.0))
            throw std::invalid_argument("ContinuousRTParams: mean run time must be > 0");
        if (!(cloud_dt > 0.0 && cloud_dt <= sensing_dt / 10.0 + 1e-12))
            throw std::invalid_argument("ContinuousRTParams: cloud_dt must be <= sensing dt / 10");
    }
};

// Piecewise-linear trajectory over one sensing window, in unwrapped
// coordinates so positions at intermediate times interpolate cleanly.
struct PiecewisePath {
    std::vector<double> t, x, y;

    void clear() {
        t.clear();
        x.clear();
        y.clear();
    }

    std::pair<double, double> position_at(double time) const {
        if (t.empty()) throw std::logic_error("PiecewisePath: empty");
        if (time <= t.front()) return {x.front(), y.front()};
        if (time >= t.back()) return {x.back(), y.back()};
        std::size_t hi = 1;
        while (t[hi] < time) ++hi;
        double span = t[hi] - t[hi - 1];
        double f = span > 0.0 ? (time - t[hi - 1]) / span : 0.0;
        return {x[hi - 1] + f * (x[hi] - x[hi - 1]), y[hi - 1] + f * (y[hi] - y[hi - 1])};
    }
};

struct ContinuousTargetState {
    double x = 0.0, y = 0.0; // wrapped into [0, L*dx)
    double heading = 0.0;    // radians
    double time = 0.0;
    double next_tumble = 0.0; // absolute time
};

inline double wrap_real(double v, double period) {
    double r = std::fmod(v, period);
    return r < 0.0 ? r + period : r;
}

inline ContinuousTargetState make_continuous_state(double x, double y, double heading,
                                                   double time, const ContinuousRTParams& p,
                                                   Rng& rng) {
    return {x, y, heading, time, time + rng.exponential(p.mean_run)};
}

// Advances the target exactly, event by event: straight segments at constant
// speed, a fresh uniform heading at each exponential tumble time. When `path`
// is given it receives the trajectory over the window for odor emission.
inline void step_continuous(ContinuousTargetState& s, const ContinuousRTParams& p,
                            double horizon, const GridSpec& g, Rng& rng,
                            PiecewisePath* path = nullptr) {
    if (!(horizon > 0.0)) throw std::invalid_argument("step_continuous: horizon must be > 0");
    const double period = g.side * g.spacing;
    double cx = s.x, cy = s.y;
    double t = s.time;
    const double t_end = s.time + horizon;
    if (path) {
        path->clear();
        path->t.push_back(t);
        path->x.push_back(cx);
        path->y.push_back(cy);
    }
    while (s.next_tumble < t_end) {
        double seg = s.next_tumble - t;
        cx += p.speed * seg * std::cos(s.heading);
        cy += p.speed * seg * std::sin(s.heading);
        t = s.next_tumble;
        if (path) {
            path->t.push_back(t);
            path->x.push_back(cx);
            path->y.push_back(cy);
        }
        s.heading = 2.0 * std::numbers::pi * rng.u01();
        s.next_tumble = t + rng.exponential(p.mean_run);
    }
    double seg = t_end - t;
    cx += p.speed * seg * std::cos(s.heading);
    cy += p.speed * seg * std::sin(s.heading);
    if (path) {
        path->t.push_back(t_end);
        path->x.push_back(cx);
        path->y.push_back(cy);
    }
    s.x = wrap_real(cx, period);
    s.y = wrap_real(cy, period);
    s.time = t_end;
}

inline LatticePoint cell_of(double x, double y, const GridSpec& g) {
    int i = static_cast<int>(std::floor(x / g.spacing));
    int j = static_cast<int>(std::floor(y / g.spacing));
    return wrap(i, j, g);
}

// Raw transition counts of the lattice-discretized continuous motion over the
// 9-state alphabet; entry [to * 9 + from]. The trajectory is sampled every
// `window` time units and cells come from flooring the position, so with
// U * window <= spacing every displacement stays inside the alphabet.
inline std::vector<std::uint64_t> count_discretized_transitions(
    const ContinuousRTParams& p, const GridSpec& g, std::uint64_t trajectory_steps, Rng& rng,
    double window = 1.0, std::optional<double> initial_heading = std::nullopt) {
    p.validate(window);
    const VelocityAlphabet alphabet(AlphabetKind::moore9);
    const int n = alphabet.size();
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(n) * n, 0);

    const double period = g.side * g.spacing;
    double heading = initial_heading.value_or(2.0 * std::numbers::pi * rng.u01());
    ContinuousTargetState s =
        make_continuous_state(period / 2.0, period / 2.0, heading, 0.0, p, rng);
    LatticePoint prev_cell = cell_of(s.x, s.y, g);
    int prev_u = -1;
    for (std::uint64_t step = 0; step < trajectory_steps + 1; ++step) {
        step_continuous(s, p, window, g, rng);
        LatticePoint cell = cell_of(s.x, s.y, g);
        auto u = alphabet.index(min_image(cell, prev_cell, g));
        if (!u)
            throw std::runtime_error(
                "count_discretized_transitions: displacement outside the 9-state alphabet; "
                "speed, spacing and window are inconsistent");
        if (prev_u >= 0) counts[static_cast<std::size_t>(*u) * n + prev_u]++;
        prev_u = *u;
        prev_cell = cell;
    }
    return counts;
}

// Empirical 9-state transition matrix: symmetrizes the integer counts over D4
// (making the result exactly invariant under simultaneous conjugation), then
// normalizes columns.
inline TransitionMatrix estimate_discretized_transition(
    const ContinuousRTParams& p, const GridSpec& g, std::uint64_t trajectory_steps, Rng& rng,
    double window = 1.0, std::optional<double> initial_heading = std::nullopt) {
    if (trajectory_steps < 1000000)
        throw std::invalid_argument("estimate_discretized_transition: need >= 1e6 steps");
    const VelocityAlphabet alphabet(AlphabetKind::moore9);
    const int n = alphabet.size();
    std::vector<std::uint64_t> counts =
        count_discretized_transitions(p, g, trajectory_steps, rng, window, initial_heading);

    // average over the group orbit; integer arithmetic keeps it exact
    std::vector<std::uint64_t> sym(static_cast<std::size_t>(n) * n, 0);
    for (int gidx = 0; gidx < kD4Order; ++gidx)
        for (int to = 0; to < n; ++to)
            for (int from = 0; from < n; ++from)
                sym[static_cast<std::size_t>(alphabet.d4_map(gidx, to)) * n +
                    alphabet.d4_map(gidx, from)] += counts[static_cast<std::size_t>(to) * n + from];

    std::vector<double> probs(static_cast<std::size_t>(n) * n, 0.0);
    for (int from = 0; from < n; ++from) {
        std::uint64_t col = 0;
        for (int to = 0; to < n; ++to) col += sym[static_cast<std::size_t>(to) * n + from];
        if (col == 0)
            throw std::runtime_error("estimate_discretized_transition: velocity state " +
                                     std::to_string(from) +
                                     " never visited; trajectory too short");
        for (int to = 0; to < n; ++to)
            probs[static_cast<std::size_t>(to) * n + from] =
                static_cast<double>(sym[static_cast<std::size_t>(to) * n + from]) /
                static_cast<double>(col);
    }
    return TransitionMatrix(AlphabetKind::moore9, std::move(probs));
}

// Unique stationary distribution by power iteration. Requires an irreducible
// chain; reducibility is detected up front by a reachability check.
inline std::vector<double> invariant_distribution(const TransitionMatrix& P,
                                                  double tol = 1e-13,
                                                  std::uint64_t max_iters = 1000000) {
    const int n = P.size();

    auto reachable_all = [&](bool transpose) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack = {0};
        seen[0] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                double e = transpose ? P.prob(v, w) : P.prob(w, v);
                if (e > 0.0 && !seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
            }
        }
        for (char c : seen)
            if (!c) return false;
        return true;
    };
    if (!reachable_all(false) || !reachable_all(true))
        throw std::runtime_error("invariant_distribution: transition matrix is reducible");

    std::vector<double> v(n, 1.0 / n), next(n, 0.0);
    for (std::uint64_t it = 0; it < max_iters; ++it) {
        for (int to = 0; to < n; ++to) {
            double acc = 0.0;
            for (int from = 0; from < n; ++from) acc += P.prob(to, from) * v[from];
            next[to] = acc;
        }
        double total = 0.0;
        for (double x : next) total += x;
        for (double& x : next) x /= total;
        double resid = 0.0;
        for (int k = 0; k < n; ++k) resid = std::max(resid, std::abs(next[k] - v[k]));
        v.swap(next);
        if (resid <= tol) return v;
    }
    throw std::runtime_error("invariant_distribution: power iteration did not converge");
}

} // namespace pursuit
