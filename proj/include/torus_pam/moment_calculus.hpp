/*
 * moment_calculus.hpp - the temporal kernels and moment bounds.
 *
 *   k1(s) = sum_k theta_k e^{-s|k|^2}
 *   k2(s) = int_{R^d} c |xi|^{-2 alpha} e^{-s|xi|^2/2} dxi = C_{d,alpha} s^{alpha - d/2}
 *   h_0 = 1,  h_{n+1}(t) = int_0^t h_n(t - s) (k1(s) + k2(s) + 1) ds
 *   H_lambda(t) = sum_n lambda^{2n} h_n(t)
 *   Theta_gamma = Laplace transform of k1 + k2 + 1 at gamma
 *   gamma_0(lambda) = inf { gamma : lambda^2 Theta_gamma < 1 }
 *
 * Lattice sums over Z^d \ {0} run over a ball of shells and are closed with
 * the continuum integral beyond it (see lattice.hpp).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bridge.hpp"
#include "covariance.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "parallel.hpp"
#include "torus.hpp"

namespace tpam {

// Prefactor of the Fourier multiplier of the Riesz kernel |x|^{-d+2 alpha}
// under the unitary angular-frequency transform; needs alpha < d/2.
inline double riesz_fourier_prefactor(double alpha, int d)
{
    require(alpha > 0.0 && alpha < 0.5 * d, "riesz_fourier_prefactor: requires 0 < alpha < d/2");
    return std::pow(2.0, 2.0 * alpha - 0.5 * d) * std::tgamma(alpha) / std::tgamma(0.5 * d - alpha);
}

// C_{d,alpha} = k2(1), by radial quadrature.  For alpha < d/2 the Fourier-side
// integral c omega_d int r^{d-1-2 alpha} e^{-r^2/2} dr is used; otherwise the
// equivalent direct-space form omega_d int r^{2 alpha - 1} e^{-r^2/2} dr,
// which continues the constant to every alpha > 0.
inline double riesz_constant(double alpha, int d)
{
    require(alpha > 0.0 && d >= 1, "riesz_constant: requires alpha > 0 and d >= 1");
    const bool fourier = alpha < 0.5 * d;
    const double power = fourier ? d - 1.0 - 2.0 * alpha : 2.0 * alpha - 1.0;
    auto radial = [power](double r) { return std::pow(r, power) * std::exp(-0.5 * r * r); };
    boost::math::quadrature::tanh_sinh<double> ts;
    boost::math::quadrature::exp_sinh<double> es;
    const double inner = ts.integrate(radial, 0.0, 1.0, 1e-14);
    const double outer = es.integrate(radial, 1.0, std::numeric_limits<double>::infinity(), 1e-14);
    const double prefactor = fourier ? riesz_fourier_prefactor(alpha, d) : 1.0;
    return prefactor * unit_sphere_area(d) * (inner + outer);
}

inline double default_lattice_radius(int d)
{
    switch (d) {
    case 1: return 4000.0;
    case 2: return 160.0;
    case 3: return 36.0;
    default: return 12.0;
    }
}

// The exponent beta in the k1 upper bound: the midpoint of the admissible
// interval (max(d/2 - alpha, 0), max(d/2 - alpha, 0) + min(alpha + 1 - d/2, 1)).
inline double default_k1_beta(double alpha, int d)
{
    return std::max(0.5 * d - alpha, 0.0) + 0.5 * std::min(alpha + 1.0 - 0.5 * d, 1.0);
}

class TemporalKernels {
public:
    explicit TemporalKernels(const NoiseSpec& spec, double lattice_radius = 0.0)
        : spec_(spec),
          lattice_(spec.d, lattice_radius > 0.0 ? lattice_radius : default_lattice_radius(spec.d)),
          norm_(std::pow(two_pi, -0.5 * spec.d))
    {
        spec_.validate();
        require_dalang(spec_);
        riesz_ = riesz_constant(spec_.alpha, spec_.d);
        riesz_power_ = spec_.alpha - 0.5 * spec_.d + 1.0;
    }

    const NoiseSpec& spec() const { return spec_; }
    double riesz() const { return riesz_; }
    // C'_{d,alpha}: the Laplace transform of k2 is C' gamma^{-(alpha + 1 - d/2)}.
    double riesz_laplace() const { return riesz_ * std::tgamma(riesz_power_); }

    double k1(double s) const
    {
        detail::check_time(s, "k1");
        const double a = spec_.alpha;
        return norm_ * (spec_.rho + lattice_.sum([a, s](double q) { return std::pow(q, -a) * std::exp(-s * q); }));
    }

    double k2(double s) const
    {
        detail::check_time(s, "k2");
        return riesz_ * std::pow(s, spec_.alpha - 0.5 * spec_.d);
    }

    double k(double s) const { return k1(s) + k2(s) + 1.0; }

    // int_a^b k1, 0 <= a < b.
    double k1_integral(double a, double b) const
    {
        require(a >= 0.0 && b > a, "k1_integral: requires 0 <= a < b");
        const double al = spec_.alpha;
        const double w = b - a;
        const double s = lattice_.sum([al, a, w](double q) {
            return std::pow(q, -al - 1.0) * std::exp(-a * q) * -std::expm1(-w * q);
        });
        return norm_ * (spec_.rho * w + s);
    }

    double k2_integral(double a, double b) const
    {
        require(a >= 0.0 && b > a, "k2_integral: requires 0 <= a < b");
        return riesz_ * (std::pow(b, riesz_power_) - std::pow(a, riesz_power_)) / riesz_power_;
    }

    double k_integral(double a, double b) const { return k1_integral(a, b) + k2_integral(a, b) + (b - a); }

    // int_0^inf e^{-gamma s} k1(s) ds as a mode sum.
    double k1_laplace(double gamma) const
    {
        require(gamma > 0.0, "k1_laplace: gamma must be positive");
        const double a = spec_.alpha;
        return norm_ * (spec_.rho / gamma +
                        lattice_.sum([a, gamma](double q) { return std::pow(q, -a) / (q + gamma); }));
    }

    double k2_laplace(double gamma) const
    {
        require(gamma > 0.0, "k2_laplace: gamma must be positive");
        return riesz_laplace() * std::pow(gamma, -riesz_power_);
    }

    double theta_gamma(double gamma) const { return k1_laplace(gamma) + k2_laplace(gamma) + 1.0 / gamma; }

    // C_{alpha,d} = (2pi)^{-d/2} sum_{k != 0} |k|^{-2 alpha - 2}.
    double k1_integral_constant() const
    {
        const double a = spec_.alpha;
        return norm_ * lattice_.sum([a](double q) { return std::pow(q, -a - 1.0); });
    }

    // C_{alpha,beta,d} = beta^beta e^{-beta} (2pi)^{-d/2} sum_{k != 0} |k|^{-2(alpha + beta)}.
    double k1_upper_constant(double beta) const
    {
        require(beta > std::max(0.5 * spec_.d - spec_.alpha, 0.0),
                "k1_upper_constant: beta must exceed max(d/2 - alpha, 0)");
        const double a = spec_.alpha;
        return std::pow(beta, beta) * std::exp(-beta) * norm_ *
               lattice_.sum([a, beta](double q) { return std::pow(q, -a - beta); });
    }

    double k1_upper(double s, double beta) const
    {
        detail::check_time(s, "k1_upper");
        return norm_ * spec_.rho + k1_upper_constant(beta) * std::pow(s, -beta);
    }

private:
    NoiseSpec spec_;
    RadialLattice lattice_;
    double norm_;
    double riesz_ = 0.0;
    double riesz_power_ = 1.0;
};

// Sum of theta_k e^{-s|k|^2} over the cube |k|_inf <= K, or the full lattice when K = 0.
inline double k1(double s, const NoiseSpec& spec, int K = 0)
{
    detail::check_time(s, "k1");
    if (K <= 0) return TemporalKernels(spec).k1(s);
    spec.validate();
    double sum = spec.rho;
    for (const Shell& sh : cube_shells(spec.d, K))
        sum += sh.count * std::pow(static_cast<double>(sh.q), -spec.alpha) * std::exp(-s * sh.q);
    return std::pow(two_pi, -0.5 * spec.d) * sum;
}

inline double k2(double s, double alpha, int d)
{
    detail::check_time(s, "k2");
    require(2.0 * (alpha + 1.0) > d, "k2: Dalang's condition 2(alpha+1) > d is required");
    return riesz_constant(alpha, d) * std::pow(s, alpha - 0.5 * d);
}

struct HnTable {
    NoiseSpec spec;
    double step = 0.0;
    std::vector<double> t_grid;
    std::vector<std::vector<double>> values;   // values[n][i] = h_n(t_i)
    std::vector<double> hstar_combined;        // cell averages of k1 + k2 + 1 on [t_j, t_{j+1}]

    int n_max() const { return static_cast<int>(values.size()) - 1; }

    // Linear interpolation in t.
    double value(int n, double t) const
    {
        require(n >= 0 && n <= n_max(), "HnTable: order out of range");
        require(t >= 0.0 && t <= t_grid.back() * (1.0 + 1e-12), "HnTable: time out of range");
        const double pos = t / step;
        const auto i = std::min(static_cast<std::size_t>(pos), t_grid.size() - 2);
        const double f = std::clamp(pos - static_cast<double>(i), 0.0, 1.0);
        return (1.0 - f) * values[n][i] + f * values[n][i + 1];
    }
};

// Product-integration convolution on a uniform grid starting at 0.  Each cell
// weight is the exact integral of k1 + k2 + 1 over the cell; on the first cell
// h_n is frozen at the upper end, elsewhere it is the endpoint average.
inline HnTable hn_table(const NoiseSpec& spec, int n_max, const std::vector<double>& t_grid,
                        int threads = 1, const TemporalKernels* kernels = nullptr)
{
    spec.validate();
    require_dalang(spec);
    require(n_max >= 0, "hn_table: n_max must be nonnegative");
    require(t_grid.size() >= 2 && t_grid.front() == 0.0, "hn_table: time grid must start at 0 with at least two points");
    const std::size_t M = t_grid.size() - 1;
    const double step = t_grid.back() / static_cast<double>(M);
    for (std::size_t i = 0; i <= M; ++i)
        require(std::abs(t_grid[i] - step * static_cast<double>(i)) <= 1e-9 * t_grid.back(),
                "hn_table: time grid must be uniform");
    std::unique_ptr<TemporalKernels> owned;
    if (!kernels) {
        owned = std::make_unique<TemporalKernels>(spec);
        kernels = owned.get();
    }

    HnTable table;
    table.spec = spec;
    table.step = step;
    table.t_grid = t_grid;
    std::vector<double> w(M);
    parallel_for(M, threads, [&](std::size_t j) {
        w[j] = kernels->k_integral(step * static_cast<double>(j), step * static_cast<double>(j + 1));
    });
    table.hstar_combined.resize(M);
    for (std::size_t j = 0; j < M; ++j) table.hstar_combined[j] = w[j] / step;

    table.values.assign(n_max + 1, std::vector<double>(M + 1, 0.0));
    std::fill(table.values[0].begin(), table.values[0].end(), 1.0);
    std::vector<double> avg(M + 1, 0.0);
    for (int n = 0; n < n_max; ++n) {
        const auto& h = table.values[n];
        auto& next = table.values[n + 1];
        for (std::size_t m = 1; m <= M; ++m) avg[m] = 0.5 * (h[m] + h[m - 1]);
        parallel_for(M, threads, [&](std::size_t idx) {
            const std::size_t i = idx + 1;
            double s = w[0] * h[i];
            for (std::size_t j = 1; j < i; ++j) s += w[j] * avg[i - j];
            next[i] = s;
        });
        next[0] = 0.0;
    }
    return table;
}

inline std::vector<double> uniform_time_grid(double t_max, std::size_t cells)
{
    require(t_max > 0.0 && cells >= 1, "uniform_time_grid: need t_max > 0 and at least one cell");
    std::vector<double> g(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) g[i] = t_max * static_cast<double>(i) / static_cast<double>(cells);
    return g;
}

struct HSum {
    double value = 1.0;
    int terms = 1;             // number of summed terms, n = 0 .. terms-1
    double last_ratio = 0.0;   // last term / partial sum
    bool converged = true;
};

// Partial sums of lambda^{2n} h_n(t) from a table, stopping when the next term
// drops below tol times the partial sum.
inline HSum h_lambda_sum(const HnTable& table, double t, double lambda, double tol = 1e-12)
{
    HSum r;
    r.value = table.value(0, t);
    const double l2 = lambda * lambda;
    double power = 1.0;
    r.converged = false;
    for (int n = 1; n <= table.n_max(); ++n) {
        power *= l2;
        const double term = power * table.value(n, t);
        r.last_ratio = term / r.value;
        if (term < tol * r.value) {
            r.converged = true;
            break;
        }
        r.value += term;
        r.terms = n + 1;
    }
    if (t == 0.0) r.converged = true;
    return r;
}

inline constexpr int h_lambda_cap = 64;

// H_lambda(t), throwing when 64 terms do not reach the tolerance.
inline double H_lambda(double t, double lambda, const NoiseSpec& spec, double tol = 1e-12,
                       std::size_t cells = 2000, int threads = 1)
{
    require(t >= 0.0, "H_lambda: time must be nonnegative");
    if (t == 0.0) return 1.0;
    const auto table = hn_table(spec, h_lambda_cap, uniform_time_grid(t, cells), threads);
    const auto r = h_lambda_sum(table, t, lambda, tol);
    if (!r.converged)
        throw NumericError("H_lambda: series not converged within " + std::to_string(h_lambda_cap) +
                           " terms; last term ratio " + std::to_string(r.last_ratio));
    return r.value;
}

inline double theta_gamma(double gamma, const NoiseSpec& spec)
{
    return TemporalKernels(spec).theta_gamma(gamma);
}

struct GammaSolve {
    double lambda = 0.0;
    double gamma0 = 0.0;
    double theta_at_gamma0 = 0.0;
    double residual = 0.0;        // |lambda^2 Theta_{gamma0} - 1|
    double bracket_lo = 0.0;      // lambda^2 Theta >= 1 here
    double bracket_hi = 0.0;      // lambda^2 Theta < 1 here
    int iterations = 0;
    double rate_exponent = 0.0;   // max(4 / (2(1+alpha) - d), 2)
    double rate_ratio = 0.0;      // gamma0 / |lambda|^rate_exponent
};

inline double gamma0_rate_exponent(double alpha, int d)
{
    return std::max(4.0 / (2.0 * (1.0 + alpha) - d), 2.0);
}

// Bisection in log gamma on lambda^2 Theta_gamma = 1.
inline GammaSolve gamma0(double lambda, const TemporalKernels& kernels, double rel_width = 1e-13)
{
    require(lambda != 0.0 && std::isfinite(lambda), "gamma0: lambda must be nonzero");
    const double l2 = lambda * lambda;
    auto excess = [&](double g) { return l2 * kernels.theta_gamma(g) - 1.0; };
    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (excess(lo) < 0.0) {
        lo *= 0.5;
        if (++guard > 400) throw NumericError("gamma0: no lower bracket found");
    }
    guard = 0;
    while (excess(hi) >= 0.0) {
        hi *= 2.0;
        if (++guard > 400) throw NumericError("gamma0: no upper bracket found");
    }
    if (lo == hi) lo = hi * 0.5;
    GammaSolve r;
    r.lambda = lambda;
    while (hi / lo - 1.0 > rel_width) {
        const double mid = std::sqrt(lo * hi);
        if (excess(mid) >= 0.0)
            lo = mid;
        else
            hi = mid;
        ++r.iterations;
        if (r.iterations > 500) throw NumericError("gamma0: bisection did not terminate");
    }
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    r.gamma0 = std::sqrt(lo * hi);
    r.theta_at_gamma0 = kernels.theta_gamma(r.gamma0);
    r.residual = std::abs(l2 * r.theta_at_gamma0 - 1.0);
    const auto& spec = kernels.spec();
    r.rate_exponent = gamma0_rate_exponent(spec.alpha, spec.d);
    r.rate_ratio = r.gamma0 / std::pow(std::abs(lambda), r.rate_exponent);
    return r;
}

inline GammaSolve gamma0(double lambda, const NoiseSpec& spec)
{
    return gamma0(lambda, TemporalKernels(spec));
}

struct MomentBound {
    double bound = 0.0;
    double j0 = 0.0;
    double H = 1.0;
    int terms = 1;
    double last_ratio = 0.0;
    bool converged = true;   // false: the bound uses the partial sum, a lower estimate of itself
};

// sqrt(2) J0(t,x) [H_{4 lambda sqrt p}(t)]^{1/2}, from a table covering t.
inline MomentBound p_moment_upper(double j0, double t, double p, const HnTable& table, double tol = 1e-12)
{
    if (!(p >= 2.0)) throw DomainError("p_moment_upper: p must be at least 2");
    require(j0 >= 0.0, "p_moment_upper: J0 must be nonnegative");
    const double lambda_eff = 4.0 * table.spec.lambda * std::sqrt(p);
    const auto h = h_lambda_sum(table, t, lambda_eff, tol);
    MomentBound b;
    b.j0 = j0;
    b.H = h.value;
    b.terms = h.terms;
    b.last_ratio = h.last_ratio;
    b.converged = h.converged;
    b.bound = std::sqrt(2.0) * j0 * std::sqrt(h.value);
    return b;
}

inline MomentBound p_moment_upper(double j0, double t, double p, const NoiseSpec& spec,
                                  double tol = 1e-12, std::size_t cells = 2000)
{
    if (!(p >= 2.0)) throw DomainError("p_moment_upper: p must be at least 2");
    if (t == 0.0) return MomentBound{std::sqrt(2.0) * j0, j0, 1.0, 1, 0.0, true};
    const auto table = hn_table(spec, h_lambda_cap, uniform_time_grid(t, cells));
    return p_moment_upper(j0, t, p, table, tol);
}

// J0^2 + (1/2) lambda^{-2} c_eps^d C_mu^2 exp(C_f t / 2), for t >= eps.
inline double lower_bound_second_moment(double t, double eps, double C_f, double C_mu, double lambda,
                                        int d, double j0)
{
    require(eps > 0.0 && t >= eps, "lower_bound_second_moment: requires t >= eps > 0");
    require(C_f > 0.0, "lower_bound_second_moment: C_f must be positive");
    require(lambda != 0.0, "lower_bound_second_moment: lambda must be nonzero");
    require(d >= 1 && C_mu >= 0.0, "lower_bound_second_moment: invalid d or C_mu");
    const double c = comparison_constants(eps).c_eps;
    return j0 * j0 + 0.5 / (lambda * lambda) * std::pow(c, d) * C_mu * C_mu * std::exp(0.5 * C_f * t);
}

struct HolderExponents {
    double beta1_sup = 0.0;   // time
    double beta2_sup = 0.0;   // space
};

inline HolderExponents holder_exponents(double alpha, int d)
{
    if (!(alpha > 0.0 && alpha < 0.5 * d))
        throw DomainError("holder_exponents: requires alpha in (0, d/2)");
    const double g = 2.0 * alpha + 2.0 - d;
    return {g / 4.0, g / 2.0};
}

}  // namespace tpam
