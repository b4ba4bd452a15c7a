/*
 * holder.hpp - empirical Hoelder exponents from p-th order structure
 * functions of simulated fields,
 *   S_time(h)  = mean |u(t + h, x) - u(t, x)|^p,
 *   S_space(l) = mean |u(t, x + l e_1) - u(t, x)|^p,
 * regressed as log S^{1/p} against log lag.  Errors come from a block
 * jackknife over paths.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "pam_solver.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace tpam {

// Per-path sums of |increment|^p and their counts, one entry per lag.
struct StructureSums {
    std::vector<double> time_sum, time_count;
    std::vector<double> space_sum, space_count;
};

struct SlopeEstimate {
    double slope = 0.0;
    double std_err = 0.0;
    double ci_low = 0.0;      // slope -/+ 2 SE
    double ci_high = 0.0;
    std::vector<double> lags;
    std::vector<double> structure;   // S(lag)^{1/p}
};

struct HolderEstimate {
    SlopeEstimate time;
    SlopeEstimate space;
    double beta1_hat = 0.0;
    double beta2_hat = 0.0;
    std::size_t n_paths = 0;
};

namespace detail {

inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline void accumulate_space(const std::vector<double>& field, int grid_n, int d, const std::vector<int>& lags,
                             double p, StructureSums& s)
{
    const std::size_t total = field.size();
    for (std::size_t k = 0; k < lags.size(); ++k) {
        for (std::size_t i = 0; i < total; ++i) {
            const int j0 = static_cast<int>(i % static_cast<std::size_t>(grid_n));
            const std::size_t j = i - j0 + static_cast<std::size_t>((j0 + lags[k]) % grid_n);
            s.space_sum[k] += std::pow(std::abs(field[j] - field[i]), p);
        }
        s.space_count[k] += static_cast<double>(total);
    }
    (void)d;
}

inline void accumulate_time(const std::vector<double>& later, const std::vector<double>& earlier, std::size_t k,
                            double p, StructureSums& s)
{
    for (std::size_t i = 0; i < later.size(); ++i) s.time_sum[k] += std::pow(std::abs(later[i] - earlier[i]), p);
    s.time_count[k] += static_cast<double>(later.size());
}

inline SlopeEstimate fit_slope(const std::vector<StructureSums>& paths, bool time, const std::vector<double>& lags,
                               double p, std::size_t blocks)
{
    const std::size_t L = lags.size();
    const std::size_t n = paths.size();
    blocks = std::min(blocks, n);
    auto structure = [&](long skip) {
        std::vector<double> sum(L, 0.0), count(L, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (skip >= 0 && i * blocks / n == static_cast<std::size_t>(skip)) continue;
            const auto& ss = time ? paths[i].time_sum : paths[i].space_sum;
            const auto& cc = time ? paths[i].time_count : paths[i].space_count;
            for (std::size_t k = 0; k < L; ++k) {
                sum[k] += ss[k];
                count[k] += cc[k];
            }
        }
        std::vector<double> out(L);
        for (std::size_t k = 0; k < L; ++k) out[k] = std::pow(sum[k] / count[k], 1.0 / p);
        return out;
    };
    std::vector<double> lx(L);
    for (std::size_t k = 0; k < L; ++k) lx[k] = std::log(lags[k]);
    auto slope = [&](long skip) {
        const auto s = structure(skip);
        std::vector<double> ly(L);
        for (std::size_t k = 0; k < L; ++k) ly[k] = std::log(s[k]);
        return ols_slope(lx, ly);
    };
    const auto jk = jackknife(blocks, slope);
    SlopeEstimate e;
    e.slope = jk.estimate;
    e.std_err = jk.std_err;
    e.ci_low = e.slope - 2.0 * e.std_err;
    e.ci_high = e.slope + 2.0 * e.std_err;
    e.lags = lags;
    e.structure = structure(-1);
    return e;
}

}  // namespace detail

// Structure sums of one stored trajectory; fields must be equally spaced in
// time.  Time lags count stored frames, space lags count grid cells along
// axis 0.
inline StructureSums structure_sums(const Trajectory& tr, const std::vector<int>& time_lags,
                                    const std::vector<int>& space_lags, double p = 2.0, std::size_t first_frame = 0)
{
    require(!tr.fields.empty(), "structure_sums: empty trajectory");
    const int n = tr.config.grid_n;
    StructureSums s;
    s.time_sum.assign(time_lags.size(), 0.0);
    s.time_count.assign(time_lags.size(), 0.0);
    s.space_sum.assign(space_lags.size(), 0.0);
    s.space_count.assign(space_lags.size(), 0.0);
    for (std::size_t f = first_frame; f < tr.fields.size(); ++f) {
        detail::accumulate_space(tr.fields[f], n, tr.config.spec.d, space_lags, p, s);
        for (std::size_t k = 0; k < time_lags.size(); ++k)
            if (f >= first_frame + static_cast<std::size_t>(time_lags[k]))
                detail::accumulate_time(tr.fields[f], tr.fields[f - time_lags[k]], k, p, s);
    }
    return s;
}

// Slopes from per-path structure sums; lags in physical units.
inline HolderEstimate empirical_holder(const std::vector<StructureSums>& paths, const std::vector<double>& time_lags,
                                       const std::vector<double>& space_lags, double p = 2.0, std::size_t blocks = 20)
{
    if (time_lags.size() < 4 || space_lags.size() < 4)
        throw DomainError("empirical_holder: at least 4 lags are needed in time and in space");
    require(paths.size() >= 2, "empirical_holder: need at least two paths");
    HolderEstimate h;
    h.n_paths = paths.size();
    h.time = detail::fit_slope(paths, true, time_lags, p, blocks);
    h.space = detail::fit_slope(paths, false, space_lags, p, blocks);
    h.beta1_hat = h.time.slope;
    h.beta2_hat = h.space.slope;
    return h;
}

inline HolderEstimate empirical_holder(const std::vector<Trajectory>& ensemble, const std::vector<int>& time_lags,
                                       const std::vector<int>& space_lags, double p = 2.0, std::size_t first_frame = 0)
{
    require(!ensemble.empty(), "empirical_holder: empty ensemble");
    std::vector<StructureSums> sums;
    for (const auto& tr : ensemble) sums.push_back(structure_sums(tr, time_lags, space_lags, p, first_frame));
    const auto& tr = ensemble.front();
    require(tr.times.size() >= 2, "empirical_holder: trajectories need at least two frames");
    const double frame = tr.times[1] - tr.times[0];
    const double cell = two_pi / tr.config.grid_n;
    std::vector<double> tl, sl;
    for (int l : time_lags) tl.push_back(l * frame);
    for (int l : space_lags) sl.push_back(l * cell);
    return empirical_holder(sums, tl, sl, p);
}

struct HolderConfig {
    SolverConfig solver;
    InitialMeasure mu;
    std::size_t n_paths = 200;
    std::uint64_t seed = 1;
    int threads = 1;
    double burn_in = 0.25;                 // structure functions use t >= burn_in
    std::vector<int> time_lags{4, 8, 16, 32, 64};   // in solver steps
    std::vector<int> space_lags{1, 2, 4, 8};       // in output grid cells
    int sample_every = 4;                  // steps between base times
    double p = 2.0;
};

// Runs the solver path by path and accumulates structure sums online.
inline HolderEstimate holder_experiment(const HolderConfig& cfg)
{
    if (cfg.time_lags.size() < 4 || cfg.space_lags.size() < 4)
        throw DomainError("holder_experiment: at least 4 lags are needed in time and in space");
    require(cfg.sample_every >= 1 && cfg.n_paths >= 2, "holder_experiment: invalid sampling");
    const PamSolver solver(cfg.solver, cfg.mu);
    const int max_lag = *std::max_element(cfg.time_lags.begin(), cfg.time_lags.end());
    const long first = static_cast<long>(std::ceil((cfg.burn_in - solver.start()) / cfg.solver.dt));
    require(first + max_lag <= solver.steps(), "holder_experiment: horizon shorter than burn-in plus largest lag");
    std::vector<StructureSums> sums(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t path) {
        RngStream rng(cfg.seed, path);
        StructureSums s;
        s.time_sum.assign(cfg.time_lags.size(), 0.0);
        s.time_count.assign(cfg.time_lags.size(), 0.0);
        s.space_sum.assign(cfg.space_lags.size(), 0.0);
        s.space_count.assign(cfg.space_lags.size(), 0.0);
        auto u = solver.initial_coefficients();
        std::deque<std::pair<long, std::vector<double>>> bases;   // base frames awaiting their lags
        for (long n = 1; n <= solver.steps(); ++n) {
            solver.step(u, rng);
            if (n < first) continue;
            const bool is_base = (n - first) % cfg.sample_every == 0 && n + max_lag <= solver.steps();
            bool needed = is_base;
            for (const auto& b : bases)
                for (int l : cfg.time_lags)
                    if (b.first + l == n) needed = true;
            if (!needed) continue;
            auto field = solver.field(u);
            for (const auto& b : bases)
                for (std::size_t k = 0; k < cfg.time_lags.size(); ++k)
                    if (b.first + cfg.time_lags[k] == n) detail::accumulate_time(field, b.second, k, cfg.p, s);
            while (!bases.empty() && bases.front().first + max_lag <= n) bases.pop_front();
            if (is_base) {
                detail::accumulate_space(field, cfg.solver.grid_n, cfg.solver.spec.d, cfg.space_lags, cfg.p, s);
                bases.emplace_back(n, std::move(field));
            }
        }
        sums[path] = std::move(s);
    });
    std::vector<double> tl, sl;
    for (int l : cfg.time_lags) tl.push_back(l * cfg.solver.dt);
    for (int l : cfg.space_lags) sl.push_back(l * two_pi / cfg.solver.grid_n);
    return empirical_holder(sums, tl, sl, cfg.p);
}

}  // namespace tpam
