#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "pursuit/bessel.hpp"
#include "pursuit/grid.hpp"
#include "pursuit/rng.hpp"
#include "pursuit/target.hpp"

namespace pursuit {

// Odor environment. The discrete setup uses the quasi-static mean-field
// solution of the advection-diffusion-decay equation: mean concentration
// <theta> = (R tau_d / 2 pi lambda^2) K0(r / lambda), a Smoluchowski hit rate
// mu = (2 pi kappa dt / ln(2 lambda / dx)) <theta>, and Bernoulli detections
// with miss probability exp(-mu). The continuous setup simulates the odor
// tracers explicitly and gives the agent the approximate likelihood
// 1 - exp(-dx^2 <theta>) instead.

enum class Observation : std::uint8_t { no_detection, detection, found };

struct LikelihoodPair {
    double no;
    double yes;
};

// Bernoulli likelihoods from an expected detection count. The pair sums to
// one exactly because `yes` is computed as 1 - no.
inline LikelihoodPair bernoulli_pair(double expected_hits) {
    double no = std::exp(-expected_hits);
    return {no, 1.0 - no};
}

// Per-displacement likelihood tables consumed by the belief machinery.
// The d = 0 slot is zeroed: the agent's own cell is always inside the capture
// neighborhood, so no posterior weight may survive there.
struct LikelihoodField {
    GridSpec grid;
    std::vector<double> yes, no;
    std::vector<double> yes_plogp, no_plogp; // w * log2(w), 0 at w = 0

    LikelihoodPair at(Displacement d) const {
        int slot = disp_index(d, grid);
        return {no[slot], yes[slot]};
    }
};

struct DetectionParams {
    double lambda;        // decay length, sqrt(kappa * tau_d)
    double emission_rate; // R
    double tau_d;         // odor decay time
    double kappa;         // effective diffusivity
    double dx = 1.0;      // lattice spacing
    double dt = 1.0;      // sensing interval
};

class DetectionModel {
  public:
    DetectionModel(const GridSpec& g, DetectionParams p) : grid_(g), p_(p) {
        if (!(p_.lambda > 0.0 && p_.emission_rate > 0.0 && p_.tau_d > 0.0 && p_.kappa > 0.0 &&
              p_.dx > 0.0 && p_.dt > 0.0))
            throw std::invalid_argument("DetectionModel: all parameters must be positive");
        if (std::abs(p_.lambda * p_.lambda - p_.kappa * p_.tau_d) >
            1e-12 * std::max(1.0, p_.lambda * p_.lambda))
            throw std::invalid_argument("DetectionModel: lambda^2 != kappa * tau_d");
        if (!(2.0 * p_.lambda > p_.dx))
            throw std::invalid_argument("DetectionModel: need lambda > dx / 2");
        if (std::abs(p_.dx - g.spacing) > 1e-12)
            throw std::invalid_argument("DetectionModel: dx disagrees with the grid spacing");

        const int slots = g.cells();
        theta_.assign(slots, std::numeric_limits<double>::quiet_NaN());
        mu_.assign(slots, std::numeric_limits<double>::quiet_NaN());
        const double conc_prefactor =
            p_.emission_rate * p_.tau_d / (2.0 * std::numbers::pi * p_.lambda * p_.lambda);
        const double smoluchowski =
            2.0 * std::numbers::pi * p_.kappa * p_.dt / std::log(2.0 * p_.lambda / p_.dx);
        for (int slot = 0; slot < slots; ++slot) {
            Displacement d = disp_from_index(slot, g);
            if (d == Displacement{0, 0}) continue;
            double r = std::sqrt(static_cast<double>(d.norm_sq_cells())) * p_.dx;
            theta_[slot] = conc_prefactor * bessel_k0(r / p_.lambda);
            mu_[slot] = smoluchowski * theta_[slot];
        }
    }

    static DetectionModel from_length_scale(const GridSpec& g, double lambda, double emission_rate,
                                            double tau_d, double dt = 1.0) {
        return DetectionModel(
            g, {lambda, emission_rate, tau_d, lambda * lambda / tau_d, g.spacing, dt});
    }
    static DetectionModel from_diffusivity(const GridSpec& g, double kappa, double emission_rate,
                                           double tau_d, double dt = 1.0) {
        return DetectionModel(
            g, {std::sqrt(kappa * tau_d), emission_rate, tau_d, kappa, g.spacing, dt});
    }

    const GridSpec& grid() const { return grid_; }
    const DetectionParams& params() const { return p_; }

    double mean_concentration(Displacement d) const { return table_at(theta_, d); }
    double hit_rate(Displacement d) const { return table_at(mu_, d); }

    // Exact Bernoulli likelihood of the discrete setup.
    LikelihoodPair detection_likelihood(Displacement d) const {
        return bernoulli_pair(hit_rate(d));
    }

    // The agent's approximate model in the continuous setup: the probability
    // that some tracer sits in the agent's cell under the quasi-static field.
    LikelihoodPair approx_likelihood(Displacement d) const {
        return bernoulli_pair(p_.dx * p_.dx * mean_concentration(d));
    }

    // U tau_d / lambda; the quasi-static field is trustworthy when << 1.
    double quasi_static_ratio(double target_speed) const {
        return target_speed * p_.tau_d / p_.lambda;
    }

    LikelihoodField bernoulli_field() const {
        return make_field([this](Displacement d) { return detection_likelihood(d); });
    }
    LikelihoodField quasi_static_field() const {
        return make_field([this](Displacement d) { return approx_likelihood(d); });
    }

  private:
    template <typename PairFn>
    LikelihoodField make_field(PairFn&& pair_at) const {
        LikelihoodField f{grid_, {}, {}, {}, {}};
        const int slots = grid_.cells();
        f.yes.assign(slots, 0.0);
        f.no.assign(slots, 0.0);
        f.yes_plogp.assign(slots, 0.0);
        f.no_plogp.assign(slots, 0.0);
        auto plogp = [](double w) { return w > 0.0 ? w * std::log2(w) : 0.0; };
        for (int slot = 0; slot < slots; ++slot) {
            Displacement d = disp_from_index(slot, grid_);
            if (d == Displacement{0, 0}) continue;
            LikelihoodPair pr = pair_at(d);
            f.yes[slot] = pr.yes;
            f.no[slot] = pr.no;
            f.yes_plogp[slot] = plogp(pr.yes);
            f.no_plogp[slot] = plogp(pr.no);
        }
        return f;
    }

    double table_at(const std::vector<double>& table, Displacement d) const {
        if (d == Displacement{0, 0})
            throw std::domain_error("DetectionModel: displacement zero is never evaluated");
        return table[disp_index(d, grid_)];
    }

    GridSpec grid_;
    DetectionParams p_;
    std::vector<double> theta_, mu_;
};

// One sensing event of the discrete setup: found inside the capture
// neighborhood, otherwise a single Bernoulli draw on the detection odds.
inline Observation sample_observation_discrete(LatticePoint agent, LatticePoint target,
                                               const DetectionModel& m, const GridSpec& g,
                                               Rng& rng) {
    Displacement d = min_image(agent, target, g);
    if (within_capture(d)) return Observation::found;
    return rng.u01() < m.detection_likelihood(d).yes ? Observation::detection
                                                     : Observation::no_detection;
}

// ---------------------------------------------------------------------------
// Lagrangian odor tracers for the continuous setup

struct OdorParticle {
    double x, y;
    double death_time;
};

struct CloudParams {
    double emission_rate;
    double kappa;
    double tau_d;

    CloudParams(double R, double k, double td) : emission_rate(R), kappa(k), tau_d(td) {
        if (!(emission_rate > 0.0) || kappa < 0.0 || !(tau_d > 0.0))
            throw std::invalid_argument("CloudParams: invalid parameters");
    }
    explicit CloudParams(const DetectionModel& m)
        : CloudParams(m.params().emission_rate, m.params().kappa, m.params().tau_d) {}
};

inline double torus_delta(double a, double b, double period) {
    double d = std::fmod(a - b, period);
    if (d > period / 2.0) d -= period;
    if (d < -period / 2.0) d += period;
    return d;
}

class ParticleCloud {
  public:
    ParticleCloud(const GridSpec& g, double time = 0.0)
        : period_(g.side * g.spacing), time_(time) {}

    double time() const { return time_; }
    std::size_t size() const { return particles_.size(); }
    std::span<const OdorParticle> particles() const { return particles_; }

    void add_particle(OdorParticle p) {
        p.x = wrap_real(p.x, period_);
        p.y = wrap_real(p.y, period_);
        particles_.push_back(p);
    }

    // Advances the cloud over [time, time + horizon): at each substep a
    // Poisson(R dt) batch is emitted at the substep-midpoint source position
    // with exponential lifetimes from the midpoint (second-order accurate in
    // dt / tau_d), every live tracer takes a Brownian kick of variance
    // 2 kappa dt per axis, and expired tracers are dropped.
    void evolve(const PiecewisePath& source, const CloudParams& p, double horizon, double dt,
                Rng& rng) {
        if (!(horizon > 0.0) || !(dt > 0.0) || dt > horizon + 1e-12)
            throw std::invalid_argument("ParticleCloud::evolve: need 0 < dt <= horizon");
        const int substeps = std::max(1, static_cast<int>(std::llround(horizon / dt)));
        const double h = horizon / substeps;
        const double sigma = std::sqrt(2.0 * p.kappa * h);
        for (int k = 0; k < substeps; ++k) {
            const double t_mid = time_ + (k + 0.5) * h;
            auto [sx, sy] = source.position_at(t_mid);
            std::uint64_t emitted = rng.poisson(p.emission_rate * h);
            for (std::uint64_t e = 0; e < emitted; ++e)
                add_particle({sx, sy, t_mid + rng.exponential(p.tau_d)});
            for (auto& particle : particles_) {
                auto [g1, g2] = rng.normal_pair();
                particle.x = wrap_real(particle.x + sigma * g1, period_);
                particle.y = wrap_real(particle.y + sigma * g2, period_);
            }
            const double t_next = time_ + (k + 1) * h;
            std::erase_if(particles_, [&](const OdorParticle& q) { return q.death_time <= t_next; });
        }
        time_ += horizon;
    }

    // Closed-ball proximity test against all live tracers, periodic metric.
    bool any_within(double cx, double cy, double radius) const {
        const double r2 = radius * radius;
        for (const auto& p : particles_) {
            double ddx = torus_delta(p.x, cx, period_);
            double ddy = torus_delta(p.y, cy, period_);
            if (ddx * ddx + ddy * ddy <= r2) return true;
        }
        return false;
    }

  private:
    double period_;
    double time_;
    std::vector<OdorParticle> particles_;
};

inline Observation sample_observation_continuous(LatticePoint agent, const ParticleCloud& cloud,
                                                 double detection_radius, const GridSpec& g) {
    double cx = (agent.i + 0.5) * g.spacing;
    double cy = (agent.j + 0.5) * g.spacing;
    return cloud.any_within(cx, cy, detection_radius) ? Observation::detection
                                                      : Observation::no_detection;
}

// Steady-state cloud behind a source that arrives at `at_origin` at time t0.
// Run-and-tumble statistics are reversible, so a time-reversed trajectory
// from the arrival point is a valid history; a tracer emitted `age` before t0
// survives with probability exp(-age / tau_d) and has diffused by a Gaussian
// of variance 2 kappa age. Its remaining lifetime is exponential again by
// memorylessness.
inline ParticleCloud prewarm_cloud(const ContinuousTargetState& at_origin,
                                   const ContinuousRTParams& target, const CloudParams& cloud,
                                   const GridSpec& g, double warmup, Rng& rng) {
    ParticleCloud out(g, at_origin.time);
    ContinuousTargetState rev = make_continuous_state(
        at_origin.x, at_origin.y, 2.0 * std::numbers::pi * rng.u01(), 0.0, target, rng);
    const double dt = target.cloud_dt;
    const int substeps = static_cast<int>(std::llround(warmup / dt));
    PiecewisePath path;
    for (int k = 0; k < substeps; ++k) {
        step_continuous(rev, target, dt, g, rng, &path);
        double age = (k + 0.5) * dt; // substep midpoint, matching evolve()
        double survival = std::exp(-age / cloud.tau_d);
        std::uint64_t emitted = rng.poisson(cloud.emission_rate * dt * survival);
        if (emitted > 0) {
            auto [px, py] = path.position_at(k * dt + 0.5 * dt);
            double sigma = std::sqrt(2.0 * cloud.kappa * age);
            for (std::uint64_t e = 0; e < emitted; ++e) {
                auto [g1, g2] = rng.normal_pair();
                out.add_particle(
                    {px + sigma * g1, py + sigma * g2, at_origin.time + rng.exponential(cloud.tau_d)});
            }
        }
    }
    return out;
}

} // namespace pursuit
