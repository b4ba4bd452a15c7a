/*
 * covariance.hpp - the spatial covariance f_{alpha,rho} of the noise on T^d.
 *
 * Fourier weights (coefficients against (2pi)^{-d/2} e^{ik.x}):
 *   theta_0 = rho (2pi)^{-d/2},   theta_k = |k|^{-2 alpha} (2pi)^{-d/2},
 * so that
 *   f(x) = (2pi)^{-d} [rho + sum_{k != 0} |k|^{-2 alpha} e^{ik.x}].
 *
 * Time-integral form with the same weights:
 *   f(x) = rho (2pi)^{-d} + (1/Gamma(alpha)) int_0^inf t^{alpha-1}
 *          (G(2t, x) - (2pi)^{-d}) dt,
 * the kernel at time 2t carrying the Fourier multiplier e^{-|k|^2 t}.
 *
 * For small alpha the series converges only conditionally.  The spectral
 * evaluator sums explicitly up to a cutoff along the axis of largest |x_i|
 * and closes each row with a summation-by-parts expansion of its tail.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "errors.hpp"
#include "heat_kernel.hpp"
#include "lattice.hpp"
#include "torus.hpp"

namespace tpam {

struct NoiseSpec {
    int d = 1;
    double alpha = 0.5;
    double rho = 0.0;
    double lambda = 1.0;

    void validate() const
    {
        require(d >= 1, "NoiseSpec: dimension must be at least 1");
        require(alpha > 0.0 && std::isfinite(alpha), "NoiseSpec: alpha must be positive");
        require(rho >= 0.0 && std::isfinite(rho), "NoiseSpec: rho must be nonnegative");
        require(std::isfinite(lambda), "NoiseSpec: lambda must be finite");
    }

    // 2(alpha + 1) > d.
    bool dalang() const { return 2.0 * (alpha + 1.0) > d; }

    std::string dalang_statement() const
    {
        return "2(alpha+1) = " + std::to_string(2.0 * (alpha + 1.0)) +
               (dalang() ? " > " : " <= ") + "d = " + std::to_string(d);
    }
};

inline bool dalang_check(const NoiseSpec& spec) { return spec.dalang(); }

inline void require_dalang(const NoiseSpec& spec)
{
    if (!spec.dalang())
        throw DomainError("Dalang's condition fails: " + spec.dalang_statement());
}

inline double fourier_weight(const NoiseSpec& spec, const std::vector<int>& k)
{
    require(static_cast<int>(k.size()) == spec.d, "fourier_weight: dimension mismatch");
    double q = 0.0;
    for (int c : k) q += static_cast<double>(c) * c;
    const double norm = std::pow(two_pi, -0.5 * spec.d);
    if (q == 0.0) return spec.rho * norm;
    return std::pow(q, -spec.alpha) * norm;
}

// Weights theta_k on the cube |k|_inf <= K, stored in centered order:
// index = sum_i (k_i + K) (2K+1)^i.
struct SpectralWeights {
    int d = 1;
    int K = 0;
    std::vector<double> theta;

    int side() const { return 2 * K + 1; }
    std::size_t size() const { return theta.size(); }

    std::size_t index(const std::vector<int>& k) const
    {
        std::size_t idx = 0, stride = 1;
        for (int i = 0; i < d; ++i) {
            idx += static_cast<std::size_t>(k[i] + K) * stride;
            stride *= static_cast<std::size_t>(side());
        }
        return idx;
    }

    std::vector<int> mode(std::size_t idx) const
    {
        std::vector<int> k(d);
        for (int i = 0; i < d; ++i) {
            k[i] = static_cast<int>(idx % side()) - K;
            idx /= side();
        }
        return k;
    }

    double weight(const std::vector<int>& k) const
    {
        for (int c : k)
            if (c < -K || c > K) return 0.0;
        return theta[index(k)];
    }
};

// Weights for |k|_inf <= K; modes with |k|_inf > keep are set to zero
// (keep = 0 leaves only the constant mode).
inline SpectralWeights make_weights(const NoiseSpec& spec, int K, int keep = -1)
{
    spec.validate();
    require(K >= 0, "make_weights: cutoff must be nonnegative");
    if (keep < 0) keep = K;
    SpectralWeights w;
    w.d = spec.d;
    w.K = K;
    std::size_t total = 1;
    for (int i = 0; i < spec.d; ++i) total *= static_cast<std::size_t>(2 * K + 1);
    w.theta.resize(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        const auto k = w.mode(idx);
        int linf = 0;
        for (int c : k) linf = std::max(linf, std::abs(c));
        w.theta[idx] = linf <= keep ? fourier_weight(spec, k) : 0.0;
    }
    return w;
}

// (2pi)^{-d/2} sum_{|k|_inf <= K} theta_k cos(k.x): the plain truncated series.
inline double covariance_truncated(const NoiseSpec& spec, const std::vector<double>& x, int K)
{
    spec.validate();
    require(static_cast<int>(x.size()) == spec.d, "covariance_truncated: dimension mismatch");
    const int d = spec.d;
    // Octant walk: the sum over sign patterns of cos(k.x) is 2^{nz} prod cos(k_i x_i).
    std::vector<int> k(d, 0);
    double sum = 0.0;
    while (true) {
        double q = 0.0, weight = 1.0;
        for (int i = 0; i < d; ++i) {
            q += static_cast<double>(k[i]) * k[i];
            if (k[i] != 0) weight *= 2.0 * std::cos(k[i] * x[i]);
        }
        sum += q == 0.0 ? spec.rho : weight * std::pow(q, -spec.alpha);
        int i = 0;
        while (i < d && ++k[i] > K) k[i++] = 0;
        if (i == d) break;
    }
    return sum * std::pow(two_pi, -d);
}

struct CovarianceValue {
    double value = 0.0;
    double error_bound = 0.0;
};

struct SpectralEvalOptions {
    int min_inner = 256;          // explicit terms along the summation axis, at least
    double inner_factor = 200.0;  // and at least inner_factor / |1 - e^{i x_a}|
    int max_order = 10;           // summation-by-parts terms in each row tail
    double outer_decay = 40.0;    // transverse cutoff M = outer_decay / |x_a|
    int max_outer = 20000;
    double max_work = 2e9;        // refuse evaluations needing more series terms
};

namespace detail {

struct RowSum {
    double value = 0.0;
    double error = 0.0;
};

// sum_{k in Z, (k, m) != 0} (k^2 + m2)^{-alpha} cos(k xa), for xa != 0 mod 2pi.
inline RowSum covariance_row(double m2, double alpha, double xa, int N, int max_order)
{
    using ld = long double;
    auto g = [&](ld k) { return std::pow(k * k + static_cast<ld>(m2), -static_cast<ld>(alpha)); };
    RowSum out;
    ld s = m2 > 0.0 ? g(0) : 0.0L;
    ld c = 0.0L;  // Kahan compensation
    for (int k = 1; k <= N; ++k) {
        const ld term = 2.0L * g(k) * std::cos(static_cast<ld>(k) * xa);
        const ld y = term - c;
        const ld t = s + y;
        c = (t - s) - y;
        s = t;
    }
    // Tail T = sum_{k > N} g(k) z^k
    //        = z^{N+1}/(1-z) sum_j (z/(1-z))^j (Delta^j g)(N+1).
    const std::complex<ld> z(std::cos(static_cast<ld>(xa)), std::sin(static_cast<ld>(xa)));
    const std::complex<ld> one_minus = 1.0L - z;
    const std::complex<ld> w = z / one_minus;
    const ld abs_one_minus = std::abs(one_minus);
    std::vector<ld> diff(max_order + 2);
    for (int i = 0; i < max_order + 2; ++i) diff[i] = g(static_cast<ld>(N + 1 + i));
    const ld g0 = diff[0];
    std::complex<ld> lead = std::polar(1.0L, static_cast<ld>(N + 1) * static_cast<ld>(xa)) / one_minus;
    std::complex<ld> tail = 0.0L;
    ld last = std::numeric_limits<ld>::infinity();
    ld err = 0.0L;
    for (int j = 0; j <= max_order; ++j) {
        const std::complex<ld> term = lead * diff[0];
        const ld mag = std::abs(term);
        const ld noise = std::ldexp(std::numeric_limits<ld>::epsilon() * g0, j) /
                         std::pow(abs_one_minus, static_cast<ld>(j + 1));
        if (mag >= last || mag <= noise) {
            err = std::max(mag <= noise ? noise : last, noise);
            break;
        }
        tail += term;
        last = mag;
        err = mag;
        for (int i = 0; i + 1 < max_order + 2 - j; ++i) diff[i] = diff[i + 1] - diff[i];
        lead *= w;
    }
    out.value = static_cast<double>(s + 2.0L * tail.real());
    out.error = static_cast<double>(2.0L * err) + 1e-15 * static_cast<double>(std::abs(s));
    return out;
}

}  // namespace detail

// f_{alpha,rho}(x) from the Fourier series, with an error bound.
inline CovarianceValue covariance_eval(const NoiseSpec& spec, const std::vector<double>& x_in,
                                       const SpectralEvalOptions& opt = {})
{
    spec.validate();
    const int d = spec.d;
    require(static_cast<int>(x_in.size()) == d, "covariance_eval: dimension mismatch");
    std::vector<double> x(d);
    int axis = 0;
    for (int i = 0; i < d; ++i) {
        x[i] = signed_mod(x_in[i]);
        if (std::abs(x[i]) > std::abs(x[axis])) axis = i;
    }
    const double norm = std::pow(two_pi, -d);
    const double xa = x[axis];
    CovarianceValue out;
    if (xa == 0.0) {
        if (spec.alpha <= 0.5 * d)
            throw SingularityError("covariance_eval: f is singular at x = 0 when alpha <= d/2");
        const RadialLattice lattice(d, d == 1 ? 100000.0 : (d == 2 ? 600.0 : 80.0));
        const double a = spec.alpha;
        const double s = lattice.sum([a](double q) { return std::pow(q, -a); });
        out.value = norm * (spec.rho + s);
        out.error_bound = norm * 1e-6 * std::abs(s);
        return out;
    }
    const double abs_one_minus = 2.0 * std::abs(std::sin(0.5 * xa));
    const int N = std::max(opt.min_inner, static_cast<int>(std::ceil(opt.inner_factor / abs_one_minus)));
    const int M = d == 1 ? 0
                         : std::min(opt.max_outer,
                                    static_cast<int>(std::ceil(opt.outer_decay / std::abs(xa))));
    const double work = std::pow(static_cast<double>(M) + 1.0, d - 1) * static_cast<double>(N);
    if (work > opt.max_work)
        throw NumericError("covariance_eval: " + std::to_string(work) +
                           " series terms needed this close to the origin; use covariance_eval_integral");
    std::vector<double> perp;
    for (int i = 0; i < d; ++i)
        if (i != axis) perp.push_back(x[i]);
    const int dp = d - 1;

    double sum = 0.0, err = 0.0, outer_shell = 0.0;
    std::vector<int> k(dp, 0);
    while (true) {
        double m2 = 0.0, weight = 1.0;
        int linf = 0;
        for (int i = 0; i < dp; ++i) {
            m2 += static_cast<double>(k[i]) * k[i];
            linf = std::max(linf, k[i]);
            if (k[i] != 0) weight *= 2.0 * std::cos(k[i] * perp[i]);
        }
        const double mult = std::pow(2.0, static_cast<double>(
                                               std::count_if(k.begin(), k.end(), [](int c) { return c != 0; })));
        const auto row = detail::covariance_row(m2, spec.alpha, xa, N, opt.max_order);
        sum += weight * row.value;
        err += mult * row.error;
        if (dp > 0 && linf == M) outer_shell += mult * std::abs(row.value);
        int i = 0;
        while (i < dp && ++k[i] > M) k[i++] = 0;
        if (i == dp) break;
    }
    out.value = norm * (spec.rho + sum);
    out.error_bound = norm * (err + outer_shell);
    return out;
}

template <std::same_as<TorusPoint> Point>
CovarianceValue covariance_eval(const NoiseSpec& spec, const Point& x,
                                       const SpectralEvalOptions& opt = {})
{
    return covariance_eval(spec, x.coords(), opt);
}

struct QuadPlan {
    double tol = 1e-11;        // relative tolerance of the double-exponential rules
    double max_error = 1e-9;   // error estimate, relative to max(1, |f|), above which evaluation fails
};

// f_{alpha,rho}(x) from the time integral, split at t = 1.
inline CovarianceValue covariance_eval_integral(const NoiseSpec& spec, const std::vector<double>& x_in,
                                                const QuadPlan& plan = {},
                                                const KernelConfig& kcfg = {})
{
    spec.validate();
    const int d = spec.d;
    require(static_cast<int>(x_in.size()) == d, "covariance_eval_integral: dimension mismatch");
    std::vector<double> x(d);
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) {
        x[i] = signed_mod(x_in[i]);
        r2 += x[i] * x[i];
    }
    if (r2 == 0.0 && spec.alpha <= 0.5 * d)
        throw SingularityError("covariance_eval_integral: f is singular at x = 0 when alpha <= d/2");
    const double a = spec.alpha;
    const double c = uniform_density(d);

    // Short times: t = tau^{1/a}, t^{a-1} dt = dtau / a.
    auto short_integrand = [&](double tau) {
        const double t = std::max(std::pow(tau, 1.0 / a), 1e-280);
        return heat_kernel(2.0 * t, x, kcfg) - c;
    };
    double short_part = 0.0, short_err = 0.0;
    if (r2 > 0.0) {
        const double tstar = r2 / (2.0 * d);
        std::vector<double> cuts{0.0};
        for (double tc = tstar / 256.0; tc < 1.0; tc *= 4.0) cuts.push_back(std::pow(tc, a));
        cuts.push_back(1.0);
        // The integrand is smooth on each geometric piece; the error estimate
        // is the spread between the 31- and 61-point Kronrod rules.
        using gk31 = boost::math::quadrature::gauss_kronrod<double, 31>;
        using gk61 = boost::math::quadrature::gauss_kronrod<double, 61>;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double fine = gk61::integrate(short_integrand, cuts[i], cuts[i + 1], 0, 0.0);
            const double coarse = gk31::integrate(short_integrand, cuts[i], cuts[i + 1], 0, 0.0);
            short_part += fine;
            short_err += std::abs(fine - coarse);
        }
    } else {
        boost::math::quadrature::tanh_sinh<double> ts;
        double e = 0.0;
        short_part = ts.integrate(short_integrand, 0.0, 1.0, plan.tol, &e);
        short_err = e;
    }
    short_part /= a;
    short_err /= a;

    // Long times: the deviation decays like e^{-t}.
    auto long_integrand = [&](double t) {
        if (t > 1e4) return 0.0;
        return std::pow(t, a - 1.0) * heat_kernel_deviation(2.0 * t, x, kcfg);
    };
    boost::math::quadrature::exp_sinh<double> es;
    double long_err = 0.0;
    const double long_part =
        es.integrate(long_integrand, 1.0, std::numeric_limits<double>::infinity(), plan.tol, &long_err);

    const double g = std::tgamma(a);
    CovarianceValue out;
    out.value = spec.rho * c + (short_part + long_part) / g;
    out.error_bound = (std::abs(short_err) + std::abs(long_err)) / g;
    if (!(out.error_bound <= plan.max_error * std::max(1.0, std::abs(out.value))) || !std::isfinite(out.value))
    {
        char buf[192];
        std::snprintf(buf, sizeof buf,
                      "covariance_eval_integral: quadrature error estimate %.3g exceeds %.3g "
                      "(short part %.6g +- %.3g, long part %.6g +- %.3g)",
                      out.error_bound, plan.max_error, short_part, short_err, long_part, long_err);
        throw NumericError(buf);
    }
    return out;
}

template <std::same_as<TorusPoint> Point>
CovarianceValue covariance_eval_integral(const NoiseSpec& spec, const Point& x,
                                                const QuadPlan& plan = {},
                                                const KernelConfig& kcfg = {})
{
    return covariance_eval_integral(spec, x.coords(), plan, kcfg);
}

struct RhoStar {
    double rho_star_est = 0.0;
    double rho_sufficient = 0.0;
    double min_f = 0.0;               // minimum of f_{alpha,0} over the grid
    std::vector<double> argmin;
    int grid_n = 0;
};

// rho_sufficient = (2pi)^{-d/2} / Gamma(alpha+1) + (2pi)^{d/2} 2^alpha Theta_{1,d}.
inline double rho_sufficient(double alpha, int d, const KernelConfig& kcfg = {})
{
    return std::pow(two_pi, -0.5 * d) / std::tgamma(alpha + 1.0) +
           std::pow(two_pi, 0.5 * d) * std::pow(2.0, alpha) * kcfg.theta(1.0, d);
}

// Grid estimate of the positivity threshold; the grid x_j = -pi + j h skips the origin.
inline RhoStar rho_star(const NoiseSpec& spec_in, int grid_n, const KernelConfig& kcfg = {})
{
    require(grid_n >= 4, "rho_star: grid must have at least 4 points per axis");
    NoiseSpec spec = spec_in;
    spec.rho = 0.0;
    spec.validate();
    const int d = spec.d;
    const double h = two_pi / grid_n;
    RhoStar out;
    out.grid_n = grid_n;
    out.min_f = std::numeric_limits<double>::infinity();
    std::vector<int> j(d, 0);
    std::vector<double> x(d);
    while (true) {
        bool origin = true;
        for (int i = 0; i < d; ++i) {
            x[i] = -pi + j[i] * h;
            if (std::abs(x[i]) > 0.5 * h) origin = false;
        }
        if (!origin) {
            const double f = covariance_eval(spec, x).value;
            if (f < out.min_f) {
                out.min_f = f;
                out.argmin = x;
            }
        }
        int i = 0;
        while (i < d && ++j[i] >= grid_n) j[i++] = 0;
        if (i == d) break;
    }
    out.rho_star_est = std::pow(two_pi, d) * (-out.min_f);
    out.rho_sufficient = rho_sufficient(spec.alpha, d, kcfg);
    return out;
}

// A trigonometric polynomial phi(x) = sum_k c_k e^{ik.x}.
struct TrigPolynomial {
    int d = 1;
    std::vector<std::pair<std::vector<int>, std::complex<double>>> terms;

    double operator()(const std::vector<double>& x) const
    {
        std::complex<double> s = 0.0;
        for (const auto& [k, c] : terms) {
            double phase = 0.0;
            for (int i = 0; i < d; ++i) phase += k[i] * x[i];
            s += c * std::polar(1.0, phase);
        }
        return s.real();
    }
};

// <phi, psi>_{alpha,rho} = rho a_0 conj(b_0) + sum_{k != 0} a_k conj(b_k) |k|^{-2 alpha},
// with a_k = (2pi)^{-d/2} int phi e^{-ik.x} dx = (2pi)^{d/2} c_k.
inline double noise_inner_product(const NoiseSpec& spec, const TrigPolynomial& phi,
                                  const TrigPolynomial& psi)
{
    const double scale = std::pow(two_pi, 0.5 * spec.d);
    std::complex<double> s = 0.0;
    for (const auto& [k, c] : phi.terms)
        for (const auto& [kp, cp] : psi.terms) {
            if (k != kp) continue;
            s += (scale * c) * std::conj(scale * cp) * (fourier_weight(spec, k) * scale);
        }
    return s.real();
}

}  // namespace tpam
