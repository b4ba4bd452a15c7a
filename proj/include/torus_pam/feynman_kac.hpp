/*
 * feynman_kac.hpp - Brownian-pair estimators of the second moment and of the
 * long-time average of the covariance along B - B~.
 *
 * For a bounded initial density mu,
 *   E[u(t,x)^2] = E[ mu(x + B_t) mu(x + B~_t) exp{ lambda^2 int_0^t f(B_s - B~_s) ds } ]
 * with B, B~ independent Brownian motions on T^d started at 0.  Paths are
 * Euler increments wrapped into [-pi, pi)^d and the time integral is the
 * left-point sum.  The covariance is read from a table: f itself held at
 * f(r_cap) inside |y| < r_cap (d = 1), the truncated series of a spectral
 * solver, or a constant.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "covariance.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "lattice.hpp"
#include "noise_field.hpp"
#include "parallel.hpp"
#include "pam_solver.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "torus.hpp"

namespace tpam {

// E int_0^t f(B_s - B~_s) ds = (2pi)^{-d} [rho t + sum_{k != 0} |k|^{-2 alpha - 2} (1 - e^{-|k|^2 t})].
inline double expected_occupation(const NoiseSpec& spec, double t)
{
    spec.validate();
    require(t >= 0.0, "expected_occupation: t must be nonnegative");
    require(spec.dalang(), "expected_occupation: the mode sum converges only under Dalang's condition");
    const RadialLattice lattice(spec.d, spec.d == 1 ? 20000.0 : (spec.d == 2 ? 400.0 : 60.0));
    const double a = spec.alpha;
    const double s = lattice.sum([a, t](double q) { return std::pow(q, -a - 1.0) * -std::expm1(-q * t); });
    return std::pow(two_pi, -spec.d) * (spec.rho * t + s);
}

class CovarianceLookup {
public:
    // f(y) = rho (2pi)^{-d}: the covariance of spatially constant noise.
    static CovarianceLookup constant(const NoiseSpec& spec)
    {
        spec.validate();
        CovarianceLookup c;
        c.d_ = spec.d;
        c.constant_ = true;
        c.value_ = spec.rho * std::pow(two_pi, -spec.d);
        return c;
    }

    // d = 1: f on [0, pi], held at f(cap_radius) for |y| < cap_radius.  The
    // table is geometric on [cap_radius, split] and uniform on [split, pi].
    static CovarianceLookup capped(const NoiseSpec& spec, double cap_radius, int threads = 1,
                                   int table_points = 4096)
    {
        spec.validate();
        require(spec.d == 1, "CovarianceLookup::capped: d = 1 only");
        require(cap_radius > 0.0 && cap_radius < 1.0, "CovarianceLookup::capped: cap radius must lie in (0, 1)");
        require(table_points >= 16, "CovarianceLookup::capped: table too small");
        CovarianceLookup c;
        c.d_ = 1;
        c.cap_ = cap_radius;
        c.spec_ = spec;
        c.split_ = std::max(4.0 * cap_radius, 0.25);
        c.n_table_ = table_points;
        c.step_ = (pi - c.split_) / table_points;
        c.n_log_ = std::max(2, static_cast<int>(std::ceil(std::log(c.split_ / cap_radius) / std::log(1.01))));
        c.log_step_ = std::log(c.split_ / cap_radius) / c.n_log_;
        std::vector<double> radii;
        for (int i = 0; i <= c.n_log_; ++i) radii.push_back(cap_radius * std::exp(c.log_step_ * i));
        for (int i = 1; i <= table_points; ++i) radii.push_back(c.split_ + c.step_ * i);
        std::vector<double> values(radii.size());
        parallel_for(radii.size(), threads, [&](std::size_t i) {
            const std::vector<double> y{radii[i]};
            values[i] = radii[i] < 0.05 ? covariance_eval_integral(spec, y).value : covariance_eval(spec, y).value;
        });
        c.log_table_.assign(values.begin(), values.begin() + c.n_log_ + 1);
        c.table_.assign(values.begin() + c.n_log_, values.end());
        return c;
    }

    // The series truncated to |k|_inf <= K, tabulated on the n^d grid.
    static CovarianceLookup truncated(const NoiseSpec& spec, int K, int grid_n)
    {
        spec.validate();
        require(K >= 0 && grid_n >= 2 * K + 1 && grid_n >= 2, "CovarianceLookup::truncated: need grid_n >= 2K + 1");
        require(spec.d <= 3, "CovarianceLookup::truncated: d <= 3");
        CovarianceLookup c;
        c.d_ = spec.d;
        c.grid_n_ = grid_n;
        c.cap_ = two_pi / grid_n;
        const ModeCube cube{spec.d, K};
        const auto w = make_weights(spec, K);
        std::vector<std::complex<double>> coef(cube.size());
        const double norm = std::pow(two_pi, -0.5 * spec.d);
        for (std::size_t idx = 0; idx < cube.size(); ++idx) coef[idx] = norm * w.theta[idx];
        std::vector<std::complex<double>> grid;
        scatter_to_grid(cube, coef, grid_n, grid);
        FftPlan(spec.d, grid_n, FFTW_BACKWARD).execute(grid);
        c.table_.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) c.table_[i] = grid[i].real();
        c.step_ = two_pi / grid_n;
        return c;
    }

    // Default choice: d = 1 capped one cell of an n-point grid from the
    // origin; d > 1 truncated to the modes an n-point grid resolves.
    static CovarianceLookup for_grid(const NoiseSpec& spec, int grid_n, int threads = 1)
    {
        require(grid_n >= 8, "CovarianceLookup::for_grid: grid_n must be at least 8");
        if (spec.d == 1) return capped(spec, two_pi / grid_n, threads);
        return truncated(spec, (grid_n - 1) / 2, grid_n);
    }

    // Contribution of the first interval [0, h], where B - B~ starts at 0:
    // the exact mean for the capped table, the left-point value otherwise.
    double first_interval(double h) const
    {
        if (!constant_ && d_ == 1 && grid_n_ == 0 && spec_.dalang()) return expected_occupation(spec_, h);
        const double zero[3] = {0.0, 0.0, 0.0};
        return (*this)(zero) * h;
    }

    int dim() const { return d_; }
    bool is_constant() const { return constant_; }
    double cap_radius() const { return cap_; }

    double operator()(const double* y) const
    {
        if (constant_) return value_;
        if (d_ == 1 && grid_n_ == 0) {
            const double r = std::abs(y[0]);
            if (r <= cap_) return log_table_.front();
            if (r < split_) {
                const double u = std::log(r / cap_) / log_step_;
                const auto i = std::min(static_cast<std::size_t>(u), static_cast<std::size_t>(n_log_ - 1));
                const double w = u - static_cast<double>(i);
                return (1.0 - w) * log_table_[i] + w * log_table_[i + 1];
            }
            const double u = std::min((r - split_) / step_, static_cast<double>(n_table_));
            const auto i = std::min(static_cast<std::size_t>(u), static_cast<std::size_t>(n_table_ - 1));
            const double w = u - static_cast<double>(i);
            return (1.0 - w) * table_[i] + w * table_[i + 1];
        }
        // Multilinear interpolation on the periodic grid x_j = -pi + j h.
        double value = 0.0;
        std::size_t base[8];
        double frac[8];
        for (int a = 0; a < d_; ++a) {
            const double u = (y[a] + pi) / step_;
            const double fl = std::floor(u);
            frac[a] = u - fl;
            base[a] = static_cast<std::size_t>(((static_cast<long>(fl) % grid_n_) + grid_n_) % grid_n_);
        }
        for (int corner = 0; corner < (1 << d_); ++corner) {
            double weight = 1.0;
            std::size_t idx = 0, stride = 1;
            for (int a = 0; a < d_; ++a) {
                const int bit = (corner >> a) & 1;
                weight *= bit ? frac[a] : 1.0 - frac[a];
                idx += ((base[a] + bit) % static_cast<std::size_t>(grid_n_)) * stride;
                stride *= static_cast<std::size_t>(grid_n_);
            }
            value += weight * table_[idx];
        }
        return value;
    }

private:
    int d_ = 1;
    bool constant_ = false;
    double value_ = 0.0;
    int grid_n_ = 0;
    int n_table_ = 0;
    int n_log_ = 0;
    double step_ = 0.0;
    double log_step_ = 0.0;
    double split_ = 0.0;
    double cap_ = 0.0;
    std::vector<double> table_;
    std::vector<double> log_table_;
    NoiseSpec spec_;
};

// exp{lambda^2 E int_0^t f} times the squared infimum of the density.
inline double jensen_floor(const NoiseSpec& spec, double t, double density_inf)
{
    return density_inf * density_inf * std::exp(spec.lambda * spec.lambda * expected_occupation(spec, t));
}

namespace detail {

inline double density_value(const InitialMeasure& mu, const double* y)
{
    if (mu.kind == InitialMeasure::Kind::uniform) return mu.mass * std::pow(two_pi, -mu.d);
    const int n = mu.density_grid_n;
    const double h = two_pi / n;
    double value = 0.0;
    std::size_t base[8];
    double frac[8];
    for (int a = 0; a < mu.d; ++a) {
        const double u = (signed_mod(y[a]) + pi) / h;
        const double fl = std::floor(u);
        frac[a] = u - fl;
        base[a] = static_cast<std::size_t>(((static_cast<long>(fl) % n) + n) % n);
    }
    for (int corner = 0; corner < (1 << mu.d); ++corner) {
        double weight = 1.0;
        std::size_t idx = 0, stride = 1;
        for (int a = 0; a < mu.d; ++a) {
            const int bit = (corner >> a) & 1;
            weight *= bit ? frac[a] : 1.0 - frac[a];
            idx += ((base[a] + bit) % static_cast<std::size_t>(n)) * stride;
            stride *= static_cast<std::size_t>(n);
        }
        value += weight * mu.density[idx];
    }
    return value;
}

inline double density_infimum(const InitialMeasure& mu)
{
    if (mu.kind == InitialMeasure::Kind::uniform) return mu.mass * std::pow(two_pi, -mu.d);
    return std::max(0.0, *std::min_element(mu.density.begin(), mu.density.end()));
}

}  // namespace detail

struct FeynmanKacOptions {
    std::size_t n_paths = 10000;
    double dt_bm = 1e-3;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct FeynmanKacResult {
    MomentEstimate estimate;
    double jensen_floor = 0.0;
    bool jensen_pass = true;      // estimate + 3 SE >= floor
    double cap_radius = 0.0;
    std::size_t steps = 0;
};

// Monte-Carlo value of E[u(t,x)^2] from Brownian pairs.
inline FeynmanKacResult feynman_kac_second_moment(const NoiseSpec& spec, const InitialMeasure& mu, double t,
                                                  const std::vector<double>& x, const CovarianceLookup& f,
                                                  const FeynmanKacOptions& opt)
{
    spec.validate();
    mu.validate();
    if (!mu.is_bounded_density())
        throw DomainError("feynman_kac_second_moment: mu must be a bounded density, got " + mu.kind_name());
    const int d = spec.d;
    require(mu.d == d && f.dim() == d && static_cast<int>(x.size()) == d,
            "feynman_kac_second_moment: dimension mismatch");
    require(d <= 3, "feynman_kac_second_moment: d <= 3");
    require(t > 0.0 && opt.dt_bm > 0.0, "feynman_kac_second_moment: t and dt_bm must be positive");
    require(opt.n_paths >= 2, "feynman_kac_second_moment: need at least two paths");
    const auto steps = static_cast<std::size_t>(std::max(1L, std::lround(t / opt.dt_bm)));
    const double h = t / static_cast<double>(steps);
    const double sd = std::sqrt(h);
    const double l2 = spec.lambda * spec.lambda;

    const double first = f.first_interval(h);
    std::vector<double> samples(opt.n_paths);
    parallel_for(opt.n_paths, opt.threads, [&](std::size_t path) {
        RngStream rng(opt.seed, path);
        double b[3] = {0, 0, 0}, bt[3] = {0, 0, 0}, diff[3];
        double integral = 0.0;
        for (std::size_t n = 0; n < steps; ++n) {
            for (int a = 0; a < d; ++a) diff[a] = signed_mod(b[a] - bt[a]);
            integral += n == 0 ? first : f(diff) * h;
            for (int a = 0; a < d; ++a) {
                b[a] = signed_mod(b[a] + sd * rng.gaussian());
                bt[a] = signed_mod(bt[a] + sd * rng.gaussian());
            }
        }
        double y1[3], y2[3];
        for (int a = 0; a < d; ++a) {
            y1[a] = x[a] + b[a];
            y2[a] = x[a] + bt[a];
        }
        samples[path] = detail::density_value(mu, y1) * detail::density_value(mu, y2) * std::exp(l2 * integral);
    });
    const auto m = mean_estimate(samples);
    FeynmanKacResult r;
    r.estimate.t = t;
    r.estimate.x = x;
    r.estimate.p = 2.0;
    r.estimate.value = m.mean;
    r.estimate.std_err = m.std_err;
    r.estimate.n_samples = m.n;
    r.cap_radius = f.cap_radius();
    r.steps = steps;
    if (spec.dalang()) {
        r.jensen_floor = jensen_floor(spec, t, detail::density_infimum(mu));
        r.jensen_pass = m.mean + 3.0 * m.std_err >= r.jensen_floor;
    }
    return r;
}

struct ErgodicRow {
    double t = 0.0;
    double mean = 0.0;          // mean over paths of (1/t) int_0^t f(Y_s) ds
    double std_err = 0.0;
    double variance = 0.0;      // across paths
    double expected = 0.0;      // (1/t) E int_0^t f for the untruncated f
};

struct ErgodicReport {
    double limit = 0.0;         // rho (2pi)^{-d}
    std::vector<ErgodicRow> rows;
    bool limit_pass = false;    // largest t: |mean - limit| <= 3 SE + |expected - limit|
    bool expected_pass = false; // every t: |mean - expected| <= 3 SE
    bool variance_decreasing = false;
    double cap_radius = 0.0;
};

// Time averages of f along Y = B - B~, a Brownian motion of variance 2s per
// coordinate, for every t in t_list (rounded to multiples of dt).
inline ErgodicReport ergodic_average_check(const NoiseSpec& spec, std::vector<double> t_list, std::size_t n_paths,
                                           const CovarianceLookup& f, double dt, std::uint64_t seed, int threads = 1)
{
    spec.validate();
    require(!t_list.empty(), "ergodic_average_check: empty t_list");
    require(n_paths >= 2 && dt > 0.0, "ergodic_average_check: need n_paths >= 2 and dt > 0");
    require(f.dim() == spec.d && spec.d <= 3, "ergodic_average_check: dimension mismatch");
    std::sort(t_list.begin(), t_list.end());
    std::vector<std::size_t> marks;
    for (double t : t_list) {
        require(t > 0.0, "ergodic_average_check: times must be positive");
        marks.push_back(static_cast<std::size_t>(std::max(1L, std::lround(t / dt))));
    }
    const int d = spec.d;
    const double sd = std::sqrt(2.0 * dt);
    const double first = f.first_interval(dt);
    std::vector<std::vector<double>> avg(marks.size(), std::vector<double>(n_paths));
    parallel_for(n_paths, threads, [&](std::size_t path) {
        RngStream rng(seed, path);
        double y[3] = {0, 0, 0};
        double integral = 0.0;
        std::size_t next = 0;
        for (std::size_t n = 0; next < marks.size(); ++n) {
            while (next < marks.size() && marks[next] == n) {
                avg[next][path] = integral / (static_cast<double>(n) * dt);
                ++next;
            }
            if (next == marks.size()) break;
            integral += n == 0 ? first : f(y) * dt;
            for (int a = 0; a < d; ++a) y[a] = signed_mod(y[a] + sd * rng.gaussian());
        }
    });
    ErgodicReport rep;
    rep.limit = spec.rho * std::pow(two_pi, -d);
    rep.cap_radius = f.cap_radius();
    for (std::size_t k = 0; k < marks.size(); ++k) {
        const auto m = mean_estimate(avg[k]);
        ErgodicRow row;
        row.t = static_cast<double>(marks[k]) * dt;
        row.mean = m.mean;
        row.std_err = m.std_err;
        row.variance = m.std_err * m.std_err * static_cast<double>(m.n);
        row.expected = spec.dalang() ? expected_occupation(spec, row.t) / row.t : rep.limit;
        rep.rows.push_back(row);
    }
    const auto& last = rep.rows.back();
    rep.limit_pass = std::abs(last.mean - rep.limit) <= 3.0 * last.std_err + std::abs(last.expected - rep.limit);
    rep.expected_pass = std::all_of(rep.rows.begin(), rep.rows.end(), [](const ErgodicRow& r) {
        return std::abs(r.mean - r.expected) <= 3.0 * r.std_err;
    });
    rep.variance_decreasing = rep.rows.size() < 2 || rep.rows.back().variance < rep.rows.front().variance;
    return rep;
}

}  // namespace tpam
