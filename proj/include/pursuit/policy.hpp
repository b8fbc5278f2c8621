#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pursuit/belief.hpp"
#include "pursuit/grid.hpp"
#include "pursuit/io.hpp"
#include "pursuit/rng.hpp"
#include "pursuit/target.hpp"

namespace pursuit {

// Action selection. The greedy drive comes from the fully observable pursuit
// MDP over (relative displacement, target velocity) solved by value
// iteration; Infotaxis minimizes the expected posterior entropy; the hybrid
// policy takes argmax_a [w Q_greedy(a) - (1 - w) H[b|a]].

struct PolicySpec {
    enum class Kind { infotaxis, greedy, hybrid, random };
    Kind kind = Kind::infotaxis;
    double w = 0.5;      // hybrid blend weight
    double alpha = 0.25; // random-walk tumble probability

    void validate() const {
        if (kind == Kind::hybrid && !(w >= 0.0 && w <= 1.0))
            throw std::invalid_argument("PolicySpec: w must lie in [0,1]");
        if (kind == Kind::random && !(alpha > 0.0 && alpha <= 1.0))
            throw std::invalid_argument("PolicySpec: alpha must lie in (0,1]");
    }
    bool needs_qtable() const {
        return kind == Kind::greedy || (kind == Kind::hybrid && w > 0.0);
    }
};

// State-action values Q(d, u, a) of the fully observable MDP, indexed by the
// wrapped relative displacement d = X_ag - x. Values live in [0, 1]; capture
// displacements carry the terminal value 1. Exactly D4-equivariant.
struct QTable {
    GridSpec grid{51, 1.0};
    VelocityAlphabet alphabet{AlphabetKind::cardinal5};
    double gamma = 0.95;
    double residual = 0.0;
    std::uint64_t p_hash = 0;
    std::vector<double> values;

    int num_vel() const { return alphabet.size(); }
    std::size_t index(int slot, int u, int a) const {
        return (static_cast<std::size_t>(slot) * num_vel() + u) * kNumActions + a;
    }
    double at(int slot, int u, int a) const { return values[index(slot, u, a)]; }
    double at(Displacement d, int u, Action a) const {
        return at(disp_index(d, grid), u, static_cast<int>(a));
    }
};

// Solves the pursuit MDP: agent and target move simultaneously, the target
// with its current velocity before resampling, so d' = wrap(d + a - u);
// entering the capture set pays reward 1 and terminates. Sweeps run to a
// sup-norm Bellman residual <= tol, then Q is rebuilt from the converged
// values and exactly symmetrized over D4.
inline QTable value_iteration(const TransitionMatrix& P, const GridSpec& g, double gamma = 0.95,
                              double tol = 1e-9, std::vector<double>* residual_history = nullptr,
                              std::uint64_t max_sweeps = 100000) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("value_iteration: gamma must lie in (0,1)");
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be > 0");

    const VelocityAlphabet& alphabet = P.alphabet();
    const int n = alphabet.size();
    const int L = g.side;
    const int cells = g.cells();

    std::vector<char> capture(cells, 0);
    for (int slot = 0; slot < cells; ++slot)
        capture[slot] = within_capture(disp_from_index(slot, g)) ? 1 : 0;

    // slot of wrap(d + a - u) for every (slot, u, a)
    std::vector<int> shifted(static_cast<std::size_t>(cells) * n * kNumActions);
    for (int slot = 0; slot < cells; ++slot) {
        int si = slot / L, sj = slot % L;
        for (int u = 0; u < n; ++u) {
            Displacement du = alphabet.displacement(u);
            for (int a = 0; a < kNumActions; ++a) {
                Displacement da = kActionSteps[a];
                int ti = wrap_coord(si + da.di - du.di, L);
                int tj = wrap_coord(sj + da.dj - du.dj, L);
                shifted[(static_cast<std::size_t>(slot) * n + u) * kNumActions + a] = ti * L + tj;
            }
        }
    }

    std::vector<double> V(static_cast<std::size_t>(cells) * n, 0.0);
    std::vector<double> Vnext(V.size(), 0.0);
    std::vector<double> W(V.size(), 0.0); // W(d, u) = sum_u' P(u'|u) V(d, u')
    double residual = 0.0;
    for (std::uint64_t sweep = 0;; ++sweep) {
        if (sweep >= max_sweeps)
            throw std::runtime_error("value_iteration: no convergence after max sweeps");
        for (int slot = 0; slot < cells; ++slot)
            for (int u = 0; u < n; ++u) {
                double acc = 0.0;
                for (int v = 0; v < n; ++v)
                    acc += P.prob(v, u) * V[static_cast<std::size_t>(slot) * n + v];
                W[static_cast<std::size_t>(slot) * n + u] = acc;
            }
        residual = 0.0;
        for (int slot = 0; slot < cells; ++slot) {
            if (capture[slot]) continue; // terminal, never acted from
            for (int u = 0; u < n; ++u) {
                double best = 0.0;
                const int* row = &shifted[(static_cast<std::size_t>(slot) * n + u) * kNumActions];
                for (int a = 0; a < kNumActions; ++a) {
                    int d2 = row[a];
                    double q = capture[d2] ? 1.0 : gamma * W[static_cast<std::size_t>(d2) * n + u];
                    if (q > best) best = q;
                }
                std::size_t idx = static_cast<std::size_t>(slot) * n + u;
                residual = std::max(residual, std::abs(best - V[idx]));
                Vnext[idx] = best;
            }
        }
        V.swap(Vnext);
        if (residual_history) residual_history->push_back(residual);
        if (residual <= tol) break;
    }

    QTable q;
    q.grid = g;
    q.alphabet = alphabet;
    q.gamma = gamma;
    q.residual = residual;
    q.p_hash = transition_matrix_hash(P);
    q.values.assign(static_cast<std::size_t>(cells) * n * kNumActions, 0.0);
    for (int slot = 0; slot < cells; ++slot) // refresh W from the converged V
        for (int u = 0; u < n; ++u) {
            double acc = 0.0;
            for (int v = 0; v < n; ++v)
                acc += P.prob(v, u) * V[static_cast<std::size_t>(slot) * n + v];
            W[static_cast<std::size_t>(slot) * n + u] = acc;
        }
    for (int slot = 0; slot < cells; ++slot)
        for (int u = 0; u < n; ++u) {
            const int* row = &shifted[(static_cast<std::size_t>(slot) * n + u) * kNumActions];
            for (int a = 0; a < kNumActions; ++a) {
                double val;
                if (capture[slot])
                    val = 1.0; // terminal row: the reward is collected now
                else {
                    int d2 = row[a];
                    val = capture[d2] ? 1.0 : gamma * W[static_cast<std::size_t>(d2) * n + u];
                }
                q.values[q.index(slot, u, a)] = val;
            }
        }

    // exact D4 equivariance: assign every orbit its average
    std::vector<char> done(q.values.size(), 0);
    for (int slot = 0; slot < cells; ++slot) {
        Displacement d = disp_from_index(slot, g);
        for (int u = 0; u < n; ++u)
            for (int a = 0; a < kNumActions; ++a) {
                std::size_t base = q.index(slot, u, a);
                if (done[base]) continue;
                std::array<std::size_t, kD4Order> orbit{};
                int count = 0;
                double mean = 0.0;
                for (int gi = 0; gi < kD4Order; ++gi) {
                    int gslot = disp_index(d4_apply(gi, d), g);
                    int gu = alphabet.d4_map(gi, u);
                    int ga = static_cast<int>(d4_apply(gi, static_cast<Action>(a)));
                    std::size_t idx = q.index(gslot, gu, ga);
                    bool fresh = true;
                    for (int k = 0; k < count; ++k)
                        if (orbit[k] == idx) fresh = false;
                    if (fresh) {
                        orbit[count++] = idx;
                        mean += q.values[idx];
                    }
                }
                mean /= count;
                for (int k = 0; k < count; ++k) {
                    q.values[orbit[k]] = mean;
                    done[orbit[k]] = 1;
                }
            }
    }
    return q;
}

// Q_greedy(a) = sum_{x,u} b(x,u) Q(agent - x, u, a); linear in the belief.
inline std::array<double, kNumActions> q_greedy(const Belief& predicted, LatticePoint agent,
                                                const QTable& table) {
    if (predicted.alphabet().kind() != table.alphabet.kind())
        throw std::invalid_argument("q_greedy: belief and Q-table alphabets differ");
    if (predicted.grid().side != table.grid.side)
        throw std::invalid_argument("q_greedy: belief and Q-table grids differ");
    const GridSpec& g = predicted.grid();
    const int L = g.side;
    const int n = predicted.num_vel();
    std::array<double, kNumActions> acc{0.0, 0.0, 0.0, 0.0};
    for (int u = 0; u < n; ++u) {
        auto pl = predicted.plane(u);
        for (int i = 0; i < L; ++i) {
            const int di_row = wrap_coord(agent.i - i, L) * L;
            for (int j = 0; j < L; ++j) {
                double v = pl[i * L + j];
                if (v == 0.0) continue;
                const double* qrow =
                    &table.values[(static_cast<std::size_t>(di_row + wrap_coord(agent.j - j, L)) *
                                       n +
                                   u) *
                                  kNumActions];
                for (int a = 0; a < kNumActions; ++a) acc[a] += v * qrow[a];
            }
        }
    }
    return acc;
}

// Uniform tie-break over the exact argmax set. One draw is consumed even for
// a singleton so rng streams stay aligned across policy variants.
inline Action argmax_with_ties(const std::array<double, kNumActions>& score, Rng& rng) {
    double best = score[0];
    for (int a = 1; a < kNumActions; ++a) best = std::max(best, score[a]);
    std::array<int, kNumActions> ties{};
    int count = 0;
    for (int a = 0; a < kNumActions; ++a)
        if (score[a] == best) ties[count++] = a;
    return static_cast<Action>(ties[rng.bounded(static_cast<std::uint64_t>(count))]);
}

inline Action select_action_infotaxis(const Belief& predicted, LatticePoint agent,
                                      const LikelihoodField& field, Rng& rng,
                                      EntropyWorkspace& ws) {
    prepare_entropy_workspace(predicted, ws);
    std::array<double, kNumActions> score{};
    for (int a = 0; a < kNumActions; ++a)
        score[a] = -expected_entropy_after_prepared(predicted, static_cast<Action>(a), field,
                                                    agent, ws);
    return argmax_with_ties(score, rng);
}

// Hybrid blend in raw units: Q_greedy in [0,1] against entropy in bits.
// w = 0 reproduces Infotaxis scores bit for bit; w = 1 is pure greedy.
inline Action select_action_hybrid(const Belief& predicted, LatticePoint agent, double w,
                                   const QTable* table, const LikelihoodField& field, Rng& rng,
                                   EntropyWorkspace& ws) {
    if (!(w >= 0.0 && w <= 1.0))
        throw std::invalid_argument("select_action_hybrid: w must lie in [0,1]");
    std::array<double, kNumActions> score{0.0, 0.0, 0.0, 0.0};
    if (w > 0.0) {
        if (!table) throw std::invalid_argument("select_action_hybrid: w > 0 needs a Q-table");
        std::array<double, kNumActions> qg = q_greedy(predicted, agent, *table);
        for (int a = 0; a < kNumActions; ++a) score[a] = w * qg[a];
    }
    if (w < 1.0) {
        prepare_entropy_workspace(predicted, ws);
        for (int a = 0; a < kNumActions; ++a)
            score[a] -= (1.0 - w) * expected_entropy_after_prepared(
                                        predicted, static_cast<Action>(a), field, agent, ws);
    }
    return argmax_with_ties(score, rng);
}

// Persistent random walk without olfactory cues: keep the previous action
// with probability 1 - alpha, otherwise resample uniformly over all four
// moves (the previous action included), so runs are geometric with mean
// 4 / (3 alpha).
inline Action select_action_random(std::optional<Action> prev, double alpha, Rng& rng) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("select_action_random: alpha must lie in (0,1]");
    if (prev && rng.u01() < 1.0 - alpha) return *prev;
    return static_cast<Action>(rng.bounded(kNumActions));
}

} // namespace pursuit
