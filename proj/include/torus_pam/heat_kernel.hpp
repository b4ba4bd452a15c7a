/*
 * heat_kernel.hpp - heat kernels on T^d and R^d.
 *
 *   p_d(t,x) = (2 pi t)^{-d/2} exp(-|x|^2 / (2t))
 *   G_d(t,x) = prod_i G_1(t, x_i)
 *
 * G_1 has two dual series:
 *   spectral  G_1 = (1/2pi) [1 + 2 sum_{n>=1} e^{-n^2 t/2} cos(n x)]
 *   image     G_1 = p_1(t,x) [1 + 2 sum_{n>=1} e^{-2 pi^2 n^2/t} cosh(pi n x/t)]
 * The spectral form is used for t > t_switch and the image form otherwise.
 *
 * The constant C_t = sum_n e^{-2 n^2 pi^2/t} = sqrt(t/2pi) sum_n e^{-n^2 t/2}
 * controls the comparison C_t^d <= G/p <= (2 C_t)^d.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "torus.hpp"

namespace tpam {

struct KernelConfig {
    double tail_tol = 1e-15;
    double t_switch = two_pi;
    int max_terms = 64;
    // Theta_{eps,d} keyed by (eps, d); see with_theta().
    std::map<std::pair<double, int>, double> theta_eps_d;

    void validate() const
    {
        require(tail_tol > 0.0 && tail_tol < 1.0, "KernelConfig: tail_tol must lie in (0,1)");
        require(t_switch > 0.0, "KernelConfig: t_switch must be positive");
        require(max_terms >= 1, "KernelConfig: max_terms must be positive");
        for (const auto& [key, value] : theta_eps_d)
            require(value >= 0.0, "KernelConfig: stored Theta must be nonnegative");
    }

    KernelConfig with_theta(double eps, int d) const;
    double theta(double eps, int d) const;
};

namespace detail {

inline void check_time(double t, const char* who)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw DomainError(std::string(who) + ": time must be positive and finite");
}

// Sums term(n) for n = 1, 2, ... onto `partial` until the next term drops
// below tol * scale, where scale is the running sum of |term| plus `partial`.
template <class Term>
double sum_tail(double partial, Term term, const KernelConfig& cfg, const char* who)
{
    double scale = std::abs(partial);
    for (int n = 1; n <= cfg.max_terms; ++n) {
        const auto [value, magnitude] = term(n);
        if (magnitude <= cfg.tail_tol * scale) return partial;
        partial += value;
        scale += magnitude;
    }
    throw NumericError(std::string(who) + ": series did not converge within " +
                       std::to_string(cfg.max_terms) + " terms");
}

}  // namespace detail

inline double gauss_kernel_1d(double t, double x)
{
    detail::check_time(t, "gauss_kernel");
    return std::exp(-x * x / (2.0 * t)) / std::sqrt(two_pi * t);
}

inline double gauss_kernel(double t, const std::vector<double>& x)
{
    detail::check_time(t, "gauss_kernel");
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    return std::pow(two_pi * t, -0.5 * static_cast<double>(x.size())) * std::exp(-r2 / (2.0 * t));
}

inline double log_gauss_kernel(double t, const std::vector<double>& x)
{
    detail::check_time(t, "gauss_kernel");
    double r2 = 0.0;
    for (double c : x) r2 += c * c;
    return -0.5 * static_cast<double>(x.size()) * std::log(two_pi * t) - r2 / (2.0 * t);
}

// C_t from sum_n e^{-2 n^2 pi^2 / t}.
inline double theta_c_sum(double t, const KernelConfig& cfg = {})
{
    detail::check_time(t, "theta_c");
    return detail::sum_tail(
        1.0,
        [&](int n) {
            const double v = 2.0 * std::exp(-2.0 * pi * pi * n * n / t);
            return std::pair{v, v};
        },
        cfg, "theta_c (sum form)");
}

// 2 sum_{n>=1} e^{-n^2 t/2}, so that sqrt(2pi/t) C_t = 1 + theta_spectral_tail(t).
inline double theta_spectral_tail(double t, const KernelConfig& cfg = {})
{
    detail::check_time(t, "theta_c");
    const double s = detail::sum_tail(
        1.0,
        [&](int n) {
            const double v = 2.0 * std::exp(-0.5 * n * n * t);
            return std::pair{v, v};
        },
        cfg, "theta_c (rescaled form)");
    return s - 1.0;
}

// C_t from sqrt(t/2pi) sum_n e^{-n^2 t/2}.
inline double theta_c_rescaled(double t, const KernelConfig& cfg = {})
{
    return std::sqrt(t / two_pi) * (1.0 + theta_spectral_tail(t, cfg));
}

inline double theta_c(double t, const KernelConfig& cfg = {})
{
    return t <= cfg.t_switch ? theta_c_sum(t, cfg) : theta_c_rescaled(t, cfg);
}

// log(sqrt(2pi/t) C_t), accurate also when the argument is close to 1.
inline double log_theta3(double t, const KernelConfig& cfg = {})
{
    if (t > cfg.t_switch) return std::log1p(theta_spectral_tail(t, cfg));
    return std::log(std::sqrt(two_pi / t) * theta_c_sum(t, cfg));
}

// G_1 by the spectral cosine series.
inline double heat_kernel_spectral_1d(double t, double x, const KernelConfig& cfg = {})
{
    detail::check_time(t, "heat_kernel");
    const double s = detail::sum_tail(
        1.0,
        [&](int n) {
            const double m = 2.0 * std::exp(-0.5 * n * n * t);
            return std::pair{m * std::cos(n * x), m};
        },
        cfg, "heat_kernel (spectral series)");
    return s / two_pi;
}

// The bracket G_1 / p_1 of the image series, evaluated without forming p_1.
inline double heat_kernel_image_ratio_1d(double t, double x, const KernelConfig& cfg = {})
{
    detail::check_time(t, "heat_kernel");
    x = signed_mod(x);
    return detail::sum_tail(
        1.0,
        [&](int n) {
            const double base = -2.0 * pi * pi * n * n / t;
            const double shift = two_pi * n * x / t;
            const double v = std::exp(base + shift) + std::exp(base - shift);
            return std::pair{v, v};
        },
        cfg, "heat_kernel (image series)");
}

// G_1 by the Gaussian image series.
inline double heat_kernel_image_1d(double t, double x, const KernelConfig& cfg = {})
{
    x = signed_mod(x);
    return gauss_kernel_1d(t, x) * heat_kernel_image_ratio_1d(t, x, cfg);
}

inline double heat_kernel_1d(double t, double x, const KernelConfig& cfg = {})
{
    detail::check_time(t, "heat_kernel");
    if (t > cfg.t_switch) return heat_kernel_spectral_1d(t, x, cfg);
    return heat_kernel_image_1d(t, x, cfg);
}

// G_1(t,x) / p_1(t, signed_mod(x)).
inline double heat_kernel_ratio_1d(double t, double x, const KernelConfig& cfg = {})
{
    detail::check_time(t, "heat_kernel");
    x = signed_mod(x);
    if (t > cfg.t_switch) return heat_kernel_spectral_1d(t, x, cfg) / gauss_kernel_1d(t, x);
    return heat_kernel_image_ratio_1d(t, x, cfg);
}

inline double log_heat_kernel_1d(double t, double x, const KernelConfig& cfg = {})
{
    detail::check_time(t, "heat_kernel");
    x = signed_mod(x);
    if (t > cfg.t_switch) return std::log(heat_kernel_spectral_1d(t, x, cfg));
    return -0.5 * std::log(two_pi * t) - x * x / (2.0 * t) +
           std::log(heat_kernel_image_ratio_1d(t, x, cfg));
}

inline double heat_kernel(double t, const std::vector<double>& x, const KernelConfig& cfg = {})
{
    require(!x.empty(), "heat_kernel: dimension must be at least 1");
    double g = 1.0;
    for (double c : x) g *= heat_kernel_1d(t, c, cfg);
    return g;
}

template <std::same_as<TorusPoint> Point>
double heat_kernel(double t, const Point& x, const KernelConfig& cfg = {})
{
    return heat_kernel(t, x.coords(), cfg);
}

inline double log_heat_kernel(double t, const std::vector<double>& x, const KernelConfig& cfg = {})
{
    require(!x.empty(), "heat_kernel: dimension must be at least 1");
    double s = 0.0;
    for (double c : x) s += log_heat_kernel_1d(t, c, cfg);
    return s;
}

// G_d(t,x) - (2pi)^{-d}, without cancellation at large t.
inline double heat_kernel_deviation(double t, const std::vector<double>& x,
                                    const KernelConfig& cfg = {})
{
    detail::check_time(t, "heat_kernel");
    const int d = static_cast<int>(x.size());
    if (t <= cfg.t_switch) return heat_kernel(t, x, cfg) - uniform_density(d);
    double log_sum = 0.0;
    for (double c : x) {
        const double a = detail::sum_tail(
            0.0,
            [&](int n) {
                const double m = 2.0 * std::exp(-0.5 * n * n * t);
                return std::pair{m * std::cos(n * c), m};
            },
            cfg, "heat_kernel deviation");
        log_sum += std::log1p(a);
    }
    return uniform_density(d) * std::expm1(log_sum);
}

// Lambda_eps = max(2, sup_{t >= eps} e^{t/2} log(sqrt(2pi/t) C_t)), by grid scan.
// The function tends to 2 from below as t grows, so the scan stops once
// e^{-t/2} is negligible.
inline double lambda_eps(double eps, const KernelConfig& cfg = {}, int points_per_unit = 400)
{
    detail::check_time(eps, "lambda_eps");
    double best = 2.0;
    const double span = 80.0;
    const int n = static_cast<int>(span * points_per_unit);
    for (int i = 0; i <= n; ++i) {
        const double t = eps + span * i / n;
        best = std::max(best, std::exp(0.5 * t) * log_theta3(t, cfg));
    }
    return best;
}

// Theta_{eps,1} = Lambda e^Lambda and
// Theta_{eps,d} = Theta_{eps,1} sum_{i=1}^d (2pi)^{-(i-1)} (1 + sqrt(2pi/eps))^{d-i}.
inline double theta_eps_d(double eps, int d, const KernelConfig& cfg = {})
{
    require(d >= 1, "theta_eps_d: dimension must be at least 1");
    const double lam = lambda_eps(eps, cfg);
    const double theta1 = lam * std::exp(lam);
    const double b = 1.0 + std::sqrt(two_pi / eps);
    double s = 0.0;
    for (int i = 1; i <= d; ++i) s += std::pow(two_pi, -(i - 1)) * std::pow(b, d - i);
    return theta1 * s;
}

inline KernelConfig KernelConfig::with_theta(double eps, int d) const
{
    KernelConfig out = *this;
    out.theta_eps_d[{eps, d}] = tpam::theta_eps_d(eps, d, *this);
    return out;
}

inline double KernelConfig::theta(double eps, int d) const
{
    const auto it = theta_eps_d.find({eps, d});
    return it != theta_eps_d.end() ? it->second : tpam::theta_eps_d(eps, d, *this);
}

struct SandwichReport {
    double ratio = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool pass = false;
};

// C_t^d <= G(t,x) / p_d(t, signed_mod(x)) <= (2 C_t)^d.
inline SandwichReport kernel_sandwich_check(double t, const TorusPoint& x,
                                            const KernelConfig& cfg = {})
{
    SandwichReport r;
    r.ratio = 1.0;
    for (double c : x.coords()) r.ratio *= heat_kernel_ratio_1d(t, c, cfg);
    const double ct = theta_c(t, cfg);
    const int d = x.dim();
    r.lower = std::pow(ct, d);
    r.upper = std::pow(2.0 * ct, d);
    const double slack = 10.0 * cfg.tail_tol * r.ratio;
    r.pass = r.lower - slack <= r.ratio && r.ratio <= r.upper + slack;
    return r;
}

struct UniformBoundReport {
    double value = 0.0;
    double theta_bound = 0.0;  // (sqrt(2pi/t) C_t)^d
    double simple_bound = 0.0; // (1 + sqrt(2pi/t))^d
    bool pass = false;
};

inline UniformBoundReport kernel_uniform_bound_check(double t, const TorusPoint& x,
                                                     const KernelConfig& cfg = {})
{
    UniformBoundReport r;
    const int d = x.dim();
    r.value = heat_kernel(t, x, cfg);
    r.theta_bound = std::pow(std::sqrt(two_pi / t) * theta_c(t, cfg), d);
    r.simple_bound = std::pow(1.0 + std::sqrt(two_pi / t), d);
    const double slack = 10.0 * cfg.tail_tol * r.simple_bound;
    r.pass = r.value <= r.theta_bound * (1.0 + 10.0 * cfg.tail_tol) &&
             r.theta_bound <= r.simple_bound + slack;
    return r;
}

struct IncrementReport {
    double lhs_time = 0.0;   // |G(t,x) - G(t',x)|
    double unit_time = 0.0;  // t^{-b/2} G(2t',x) (t'-t)^{b/2}
    double c_time = 0.0;     // lhs_time / unit_time, 0 when lhs_time = 0
    double lhs_space = 0.0;  // |G(t,x) - G(t,y)|
    double unit_space = 0.0; // t^{-b/2} [G(2t,x) + G(2t,y)] dist(x,y)^b
    double c_space = 0.0;
};

// Both sides of the Hoelder-type kernel increment bounds and the smallest
// constants that make them hold at the given points.
inline IncrementReport kernel_increment_bounds(double t, double tp, const TorusPoint& x,
                                               const TorusPoint& y, double beta,
                                               const KernelConfig& cfg = {})
{
    if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("kernel_increment_bounds: beta must lie in (0,1]");
    detail::check_time(t, "kernel_increment_bounds");
    require(tp >= t, "kernel_increment_bounds: requires t <= t'");
    IncrementReport r;
    const double gtx = heat_kernel(t, x, cfg);
    r.lhs_time = std::abs(gtx - heat_kernel(tp, x, cfg));
    r.unit_time = std::pow(t, -0.5 * beta) * heat_kernel(2.0 * tp, x, cfg) *
                  std::pow(tp - t, 0.5 * beta);
    r.c_time = r.lhs_time > 0.0 ? r.lhs_time / r.unit_time : 0.0;
    r.lhs_space = std::abs(gtx - heat_kernel(t, y, cfg));
    r.unit_space = std::pow(t, -0.5 * beta) *
                   (heat_kernel(2.0 * t, x, cfg) + heat_kernel(2.0 * t, y, cfg)) *
                   std::pow(torus_distance(x, y), beta);
    r.c_space = r.lhs_space > 0.0 ? r.lhs_space / r.unit_space : 0.0;
    return r;
}

}  // namespace tpam
