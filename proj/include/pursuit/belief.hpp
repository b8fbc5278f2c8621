#pragma once

#include <cmath>
#include <cstring>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "pursuit/grid.hpp"
#include "pursuit/odor.hpp"
#include "pursuit/target.hpp"

namespace pursuit {

// The agent's joint belief b(x, u) over target position and velocity, stored
// as one dense plane of L^2 probabilities per velocity state. Every public
// operation keeps the array nonnegative and normalized.

class Belief {
  public:
    Belief(const GridSpec& g, AlphabetKind kind)
        : grid_(g), alphabet_(kind),
          data_(static_cast<std::size_t>(g.cells()) * alphabet_.size(), 0.0) {}

    const GridSpec& grid() const { return grid_; }
    const VelocityAlphabet& alphabet() const { return alphabet_; }
    int num_vel() const { return alphabet_.size(); }
    int cells() const { return grid_.cells(); }

    double at(int pos, int u) const { return data_[static_cast<std::size_t>(u) * cells() + pos]; }
    double& at(int pos, int u) { return data_[static_cast<std::size_t>(u) * cells() + pos]; }
    double at(LatticePoint p, int u) const { return at(pos_index(p, grid_), u); }

    std::span<double> plane(int u) {
        return {data_.data() + static_cast<std::size_t>(u) * cells(),
                static_cast<std::size_t>(cells())};
    }
    std::span<const double> plane(int u) const {
        return {data_.data() + static_cast<std::size_t>(u) * cells(),
                static_cast<std::size_t>(cells())};
    }
    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double total() const {
        double acc = 0.0;
        for (double v : data_) acc += v;
        return acc;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    void normalize() {
        double t = total();
        if (!(t > 0.0)) throw std::runtime_error("Belief: cannot normalize zero mass");
        for (double& v : data_) v /= t;
    }

  private:
    GridSpec grid_;
    VelocityAlphabet alphabet_;
    std::vector<double> data_;
};

// Record of one belief update step, for debugging dumps.
struct BeliefUpdateTrace {
    double pre_entropy = 0.0;
    double post_entropy = 0.0;
    Observation observation = Observation::no_detection;
    double p_found = 0.0;
};

// b(x, u) proportional to L_yes(agent - x) q(u), zero on the capture
// neighborhood of the agent. The search always starts from a detection, so
// this is both the agent's prior and the distribution the episode engine
// samples the true target from.
inline Belief initial_belief(LatticePoint agent, const LikelihoodField& field,
                             std::span<const double> q, const GridSpec& g) {
    AlphabetKind kind;
    if (q.size() == 5)
        kind = AlphabetKind::cardinal5;
    else if (q.size() == 9)
        kind = AlphabetKind::moore9;
    else
        throw std::invalid_argument("initial_belief: q must have 5 or 9 entries");
    Belief b(g, kind);
    const int L = g.side;
    for (int u = 0; u < b.num_vel(); ++u) {
        auto out = b.plane(u);
        for (int i = 0; i < L; ++i) {
            int di = min_image_coord(agent.i - i, L);
            for (int j = 0; j < L; ++j) {
                int dj = min_image_coord(agent.j - j, L);
                Displacement d{di, dj};
                if (within_capture(d)) continue;
                out[i * L + j] = field.yes[disp_index(d, g)] * q[u];
            }
        }
    }
    if (!(b.total() > 0.0))
        throw std::runtime_error("initial_belief: detection likelihood is identically zero");
    b.normalize();
    return b;
}

// b'(x', u') = sum_u P(u' | u) b(x' - u, u): the position shifts with the old
// velocity, exactly as the target moves. Mass is conserved.
inline void predict_into(const Belief& src, const TransitionMatrix& P, Belief& dst,
                         std::vector<double>& scratch) {
    if (src.alphabet().kind() != P.alphabet_kind())
        throw std::invalid_argument("predict: belief and transition matrix alphabets differ");
    if (&src == &dst) throw std::invalid_argument("predict: source and destination must differ");
    const GridSpec& g = src.grid();
    const int L = g.side;
    const int cells = g.cells();
    const int n = src.num_vel();
    dst.fill(0.0);
    scratch.resize(cells);
    for (int u = 0; u < n; ++u) {
        Displacement step = src.alphabet().displacement(u);
        auto in = src.plane(u);
        // scratch[x'] = b[x' - u]
        for (int i = 0; i < L; ++i) {
            int si = wrap_coord(i - step.di, L);
            for (int j = 0; j < L; ++j)
                scratch[i * L + j] = in[si * L + wrap_coord(j - step.dj, L)];
        }
        for (int to = 0; to < n; ++to) {
            double w = P.prob(to, u);
            if (w == 0.0) continue;
            auto out = dst.plane(to);
            for (int k = 0; k < cells; ++k) out[k] += w * scratch[k];
        }
    }
}

inline Belief predict(const Belief& src, const TransitionMatrix& P) {
    Belief dst(src.grid(), src.alphabet().kind());
    std::vector<double> scratch;
    predict_into(src, P, dst, scratch);
    return dst;
}

struct ZeroCaptureResult {
    double p_found = 0.0; // mass removed from the capture neighborhood
    bool collapsed = false;
};

// Implements the not-found conditioning: the belief inside the capture
// neighborhood of the agent is erased and the rest renormalized. When the
// surviving mass is below 1e-12 the belief has collapsed; it is left
// unnormalized and the caller must reinitialize.
inline ZeroCaptureResult zero_capture_and_renormalize(Belief& b, LatticePoint agent) {
    const GridSpec& g = b.grid();
    double removed = 0.0;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
            int pos = pos_index(wrap(agent.i + di, agent.j + dj, g), g);
            for (int u = 0; u < b.num_vel(); ++u) {
                removed += b.at(pos, u);
                b.at(pos, u) = 0.0;
            }
        }
    double remaining = b.total();
    if (remaining < 1e-12) return {removed, true};
    for (double& v : b.data()) v /= remaining;
    return {removed, false};
}

// Collapse recovery: uniform over non-capture positions times the invariant
// velocity distribution.
inline void reinitialize_uniform(Belief& b, LatticePoint agent, std::span<const double> q) {
    if (static_cast<int>(q.size()) != b.num_vel())
        throw std::invalid_argument("reinitialize_uniform: q size mismatch");
    const GridSpec& g = b.grid();
    const double open_cells = static_cast<double>(g.cells() - 9);
    for (int u = 0; u < b.num_vel(); ++u) {
        auto out = b.plane(u);
        double w = q[u] / open_cells;
        for (int i = 0; i < g.side; ++i) {
            int di = min_image_coord(agent.i - i, g.side);
            for (int j = 0; j < g.side; ++j) {
                Displacement d{di, min_image_coord(agent.j - j, g.side)};
                out[i * g.side + j] = within_capture(d) ? 0.0 : w;
            }
        }
    }
}

struct BayesResult {
    double p_obs = 0.0; // normalization constant p(H)
};

// Posterior proportional to prior times the positional likelihood of the
// observation. The agent-cell weight is zero by construction of the field;
// in engine order that cell already carries no mass.
inline BayesResult bayes_update(Belief& b, Observation obs, LatticePoint agent,
                                const LikelihoodField& field) {
    if (obs == Observation::found)
        throw std::invalid_argument("bayes_update: 'found' terminates the episode instead");
    if (field.grid.side != b.grid().side)
        throw std::invalid_argument("bayes_update: field grid mismatch");
    const GridSpec& g = b.grid();
    const int L = g.side;
    const std::vector<double>& w = obs == Observation::detection ? field.yes : field.no;
    double norm = 0.0;
    for (int u = 0; u < b.num_vel(); ++u) {
        auto pl = b.plane(u);
        for (int i = 0; i < L; ++i) {
            int wi = wrap_coord(agent.i - i, L) * L;
            for (int j = 0; j < L; ++j) {
                double v = pl[i * L + j] * w[wi + wrap_coord(agent.j - j, L)];
                pl[i * L + j] = v;
                norm += v;
            }
        }
    }
    if (norm < 1e-300)
        throw std::runtime_error("bayes_update: observation impossible under the belief");
    for (double& v : b.data()) v /= norm;
    return {norm};
}

// Shannon entropy in bits, with 0 log 0 = 0.
inline double entropy(const Belief& b) {
    double h = 0.0;
    for (double v : b.data())
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

// Position-indexed summaries of a belief, shared by the four per-action
// lookaheads of one decision.
struct EntropyWorkspace {
    std::vector<double> marginal; // B(x) = sum_u b(x, u)
    std::vector<double> plogp;    // S(x) = sum_u b log2 b
    double total = 0.0;
};

inline void prepare_entropy_workspace(const Belief& b, EntropyWorkspace& ws) {
    const int cells = b.cells();
    ws.marginal.assign(cells, 0.0);
    ws.plogp.assign(cells, 0.0);
    for (int u = 0; u < b.num_vel(); ++u) {
        auto pl = b.plane(u);
        for (int k = 0; k < cells; ++k) {
            double v = pl[k];
            if (v > 0.0) {
                ws.marginal[k] += v;
                ws.plogp[k] += v * std::log2(v);
            }
        }
    }
    ws.total = 0.0;
    for (double v : ws.marginal) ws.total += v;
}

// Expected entropy of the belief after hypothetically stepping to
// agent + a: the found branch contributes zero entropy with the belief mass
// in the capture neighborhood of the new position; the detection and
// no-detection branches weigh the entropies of the corresponding posteriors
// of the capture-zeroed belief by their belief-averaged probabilities.
inline double expected_entropy_after_prepared(const Belief& predicted, Action a,
                                              const LikelihoodField& field, LatticePoint agent,
                                              const EntropyWorkspace& ws) {
    const GridSpec& g = predicted.grid();
    const int L = g.side;
    const LatticePoint next = apply_action(agent, a, g);

    double p_found = 0.0;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
            p_found += ws.marginal[pos_index(wrap(next.i + di, next.j + dj, g), g)];

    // accumulate over all displacements outside the capture set
    double b_out = 0.0, s_out = 0.0;
    double b_yes = 0.0, s_yes = 0.0, w_yes = 0.0, w_no = 0.0;
    const int half = L / 2;
    for (int di = -half; di <= half; ++di) {
        const int xi = wrap_coord(next.i - di, L);
        const double* brow = ws.marginal.data() + xi * L;
        const double* srow = ws.plogp.data() + xi * L;
        const int drow = wrap_coord(di, L) * L;
        const bool near_row = di >= -1 && di <= 1;
        for (int dj = -half; dj <= half; ++dj) {
            if (near_row && dj >= -1 && dj <= 1) continue; // capture set
            const int slot = drow + wrap_coord(dj, L);
            const int xj = wrap_coord(next.j - dj, L);
            const double bm = brow[xj];
            const double sm = srow[xj];
            const double ly = field.yes[slot];
            b_out += bm;
            s_out += sm;
            b_yes += ly * bm;
            s_yes += ly * sm;
            w_yes += field.yes_plogp[slot] * bm;
            w_no += field.no_plogp[slot] * bm;
        }
    }
    if (!(b_out > 1e-300)) return 0.0; // everything inside the capture zone: found

    // posterior over x outside the zone is proportional to b * w, so the
    // zeroing normalization cancels; H = log2(B_w) - (S_w + W_w) / B_w
    double h_yes = 0.0;
    if (b_yes > 1e-300) h_yes = std::max(0.0, std::log2(b_yes) - (s_yes + w_yes) / b_yes);
    const double b_no = b_out - b_yes;
    double h_no = 0.0;
    if (b_no > 1e-300) {
        const double s_no = s_out - s_yes;
        h_no = std::max(0.0, std::log2(b_no) - (s_no + w_no) / b_no);
    }
    const double total = ws.total > 0.0 ? ws.total : 1.0;
    // (1 - p_f) * (p_yes H_yes + p_no H_no) with conditional branch odds
    return (b_yes * h_yes + b_no * h_no) / total;
}

inline double expected_entropy_after(const Belief& predicted, Action a,
                                     const LikelihoodField& field, LatticePoint agent) {
    EntropyWorkspace ws;
    prepare_entropy_workspace(predicted, ws);
    return expected_entropy_after_prepared(predicted, a, field, agent, ws);
}

// Debug snapshot: one L x L comma-separated grid per velocity state,
// separated by blank lines, rows indexed by i.
inline void dump_belief_csv(const Belief& b, std::ostream& out) {
    const int L = b.grid().side;
    out.precision(17);
    for (int u = 0; u < b.num_vel(); ++u) {
        out << "# velocity_state " << u << "\n";
        auto pl = b.plane(u);
        for (int i = 0; i < L; ++i) {
            for (int j = 0; j < L; ++j) out << (j ? "," : "") << pl[i * L + j];
            out << "\n";
        }
        out << "\n";
    }
}

} // namespace pursuit
