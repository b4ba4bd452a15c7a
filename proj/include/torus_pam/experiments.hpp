/*
 * experiments.hpp - Monte-Carlo moments of the solver set against the moment
 * bounds, together with the resolvent, Feynman-Kac, ergodic and Hoelder
 * experiments.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "covariance.hpp"
#include "errors.hpp"
#include "feynman_kac.hpp"
#include "holder.hpp"
#include "moment_calculus.hpp"
#include "pam_solver.hpp"
#include "parallel.hpp"
#include "resolvent.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace tpam {

struct LowerBoundInputs {
    double eps = 1.0;     // t >= eps is required
    double C_f = 0.0;     // f >= C_f > 0
    double C_mu = 0.0;    // mu >= C_mu
};

struct McMomentsConfig {
    SolverConfig solver;
    InitialMeasure mu;
    double p = 2.0;
    std::size_t n_samples = 1000;
    std::vector<double> t_list;                 // rounded to the solver's time grid
    std::vector<std::vector<double>> x_list;
    std::uint64_t seed = 1;
    int threads = 1;
    bool upper_bound = true;                     // compare with the p-moment upper bound
    std::optional<LowerBoundInputs> lower;       // compare p = 2 estimates with the lower bound
    std::size_t h_cells = 2000;
};

// E|u(t,x)|^p for spatially constant noise (only the k = 0 weight kept):
// u = J0 exp(lambda sqrt(c) B_t - lambda^2 c t / 2) with c = rho (2pi)^{-d}.
inline double constant_noise_moment(double j0, double t, double p, const NoiseSpec& spec)
{
    const double c = spec.rho * std::pow(two_pi, -spec.d);
    return std::pow(std::abs(j0), p) * std::exp(0.5 * p * (p - 1.0) * spec.lambda * spec.lambda * c * t);
}

// Ensemble estimates of E|u(t,x)|^p, one per (t, x), with the bounds that
// apply.  Paths use independent streams (seed, path).
inline std::vector<MomentEstimate> mc_moments(const McMomentsConfig& cfg)
{
    require(cfg.p > 0.0 && std::isfinite(cfg.p), "mc_moments: p must be positive");
    require(cfg.n_samples >= 2, "mc_moments: need at least two samples");
    require(!cfg.t_list.empty() && !cfg.x_list.empty(), "mc_moments: empty t_list or x_list");
    const PamSolver solver(cfg.solver, cfg.mu);
    const int d = cfg.solver.spec.d;
    for (const auto& x : cfg.x_list) require(static_cast<int>(x.size()) == d, "mc_moments: point dimension");
    std::vector<long> marks;
    for (double t : cfg.t_list) {
        const long n = std::lround((t - solver.start()) / cfg.solver.dt);
        require(n >= 0 && n <= solver.steps(), "mc_moments: time outside the solver horizon");
        marks.push_back(n);
    }
    const long last = *std::max_element(marks.begin(), marks.end());
    const std::size_t nt = marks.size(), nx = cfg.x_list.size();
    std::vector<std::vector<double>> samples(nt * nx, std::vector<double>(cfg.n_samples));
    const bool even = std::abs(cfg.p - std::round(cfg.p)) < 1e-12 && static_cast<long>(std::round(cfg.p)) % 2 == 0;

    parallel_for(cfg.n_samples, cfg.threads, [&](std::size_t path) {
        RngStream rng(cfg.seed, path);
        auto u = solver.initial_coefficients();
        for (long n = 0; n <= last; ++n) {
            if (n > 0) solver.step(u, rng);
            for (std::size_t k = 0; k < nt; ++k) {
                if (marks[k] != n) continue;
                for (std::size_t j = 0; j < nx; ++j) {
                    const double v = solver.evaluate(u, cfg.x_list[j]);
                    samples[k * nx + j][path] = even ? std::pow(v, cfg.p) : std::pow(std::abs(v), cfg.p);
                }
            }
        }
    });

    std::optional<HnTable> table;
    const NoiseSpec& spec = cfg.solver.spec;
    if (cfg.upper_bound && cfg.p >= 2.0 && spec.lambda != 0.0) {
        double t_max = 0.0;
        for (long n : marks) t_max = std::max(t_max, solver.time_at(n));
        if (t_max > 0.0)
            table = hn_table(spec, h_lambda_cap, uniform_time_grid(t_max, cfg.h_cells), cfg.threads);
    }

    std::vector<MomentEstimate> out;
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t j = 0; j < nx; ++j) {
            const auto m = mean_estimate(samples[k * nx + j]);
            MomentEstimate e;
            e.t = solver.time_at(marks[k]);
            e.x = cfg.x_list[j];
            e.p = cfg.p;
            e.value = m.mean;
            e.std_err = m.std_err;
            e.n_samples = m.n;
            const double J = j0(e.t, e.x, cfg.mu);
            if (cfg.solver.noise_cutoff() == 0) e.reference = constant_noise_moment(J, e.t, cfg.p, spec);
            if (cfg.upper_bound && cfg.p >= 2.0) {
                double bound = std::sqrt(2.0) * J;
                if (table && e.t > 0.0) {
                    const auto b = p_moment_upper(J, e.t, cfg.p, *table);
                    bound = b.bound;
                    e.upper_converged = b.converged;
                }
                e.upper_bound = std::pow(bound, cfg.p);
                e.upper_pass = e.value - 3.0 * e.std_err <= e.upper_bound;
            }
            if (cfg.lower && cfg.p == 2.0 && e.t >= cfg.lower->eps && spec.lambda != 0.0) {
                e.lower_bound = lower_bound_second_moment(e.t, cfg.lower->eps, cfg.lower->C_f, cfg.lower->C_mu,
                                                          spec.lambda, d, J);
                e.lower_pass = e.value + 3.0 * e.std_err >= e.lower_bound;
            }
            out.push_back(std::move(e));
        }
    return out;
}

}  // namespace tpam
