/*
 * bridge.hpp - Brownian-bridge densities on T^d and R^d, the comparison
 * constants c_eps and C_eps, and sweeps that test the two comparison bounds.
 *
 * Torus bridge:     G_{t,x0,x}(s,z) = G(s, z - x0) G(t - s, x - z) / G(t, x - x0).
 * Euclidean bridge: p_{t,x0,x}(s,z) = p(s(t-s)/t, z - x0 - (s/t)(x - x0)).
 *
 * Densities are combined in the log domain; the factors underflow long
 * before their ratio does.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/random/sobol.hpp>

#include "errors.hpp"
#include "heat_kernel.hpp"
#include "rng.hpp"
#include "torus.hpp"

namespace tpam {

struct BridgeSpec {
    double t = 1.0;
    std::vector<double> x0;
    std::vector<double> x;

    int dim() const { return static_cast<int>(x0.size()); }

    void validate() const
    {
        require(t > 0.0 && std::isfinite(t), "BridgeSpec: horizon must be positive");
        require(!x0.empty() && x0.size() == x.size(), "BridgeSpec: endpoints must share a dimension >= 1");
    }
};

namespace detail {

inline void check_bridge_time(const BridgeSpec& spec, double s)
{
    spec.validate();
    if (!(s > 0.0 && s < spec.t)) throw DomainError("bridge: evaluation time must lie in (0, t)");
}

inline std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b)
{
    require(a.size() == b.size(), "bridge: dimension mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

}  // namespace detail

inline double log_bridge_density_torus(const BridgeSpec& spec, double s, const std::vector<double>& z,
                                       const KernelConfig& cfg = {})
{
    detail::check_bridge_time(spec, s);
    return log_heat_kernel(s, detail::difference(z, spec.x0), cfg) +
           log_heat_kernel(spec.t - s, detail::difference(spec.x, z), cfg) -
           log_heat_kernel(spec.t, detail::difference(spec.x, spec.x0), cfg);
}

inline double bridge_density_torus(const BridgeSpec& spec, double s, const std::vector<double>& z,
                                   const KernelConfig& cfg = {})
{
    return std::exp(log_bridge_density_torus(spec, s, z, cfg));
}

// Collapsed Gaussian form.
inline double log_bridge_density_euclid(const BridgeSpec& spec, double s, const std::vector<double>& z)
{
    detail::check_bridge_time(spec, s);
    const double var = s * (spec.t - s) / spec.t;
    std::vector<double> w(z.size());
    require(z.size() == spec.x0.size(), "bridge: dimension mismatch");
    for (std::size_t i = 0; i < z.size(); ++i)
        w[i] = z[i] - (spec.x0[i] + (s / spec.t) * (spec.x[i] - spec.x0[i]));
    return log_gauss_kernel(var, w);
}

inline double bridge_density_euclid(const BridgeSpec& spec, double s, const std::vector<double>& z)
{
    return std::exp(log_bridge_density_euclid(spec, s, z));
}

// Ratio form p(s, z - x0) p(t - s, x - z) / p(t, x - x0).
inline double bridge_density_euclid_ratio(const BridgeSpec& spec, double s, const std::vector<double>& z)
{
    detail::check_bridge_time(spec, s);
    return std::exp(log_gauss_kernel(s, detail::difference(z, spec.x0)) +
                    log_gauss_kernel(spec.t - s, detail::difference(spec.x, z)) -
                    log_gauss_kernel(spec.t, detail::difference(spec.x, spec.x0)));
}

struct ComparisonConstants {
    double c_eps = 0.0;
    double C_eps = 0.0;
};

inline ComparisonConstants comparison_constants(double eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("comparison_constants: eps must be positive");
    ComparisonConstants c;
    c.c_eps = std::sqrt(eps) / (2.0 * std::sqrt(pi) + std::sqrt(2.0 * eps)) / (2.0 * std::sqrt(2.0)) *
              std::exp(-pi * pi / (2.0 * eps));
    c.C_eps = 2.0 * (1.0 + std::sqrt(two_pi / eps)) * std::exp(pi * pi / eps);
    return c;
}

// A lower constant valid on all of t >= eps, s in (0, t/2]: the Gaussian
// factor is bounded through t - s >= eps/2, giving e^{-pi^2/eps}.
inline double large_time_lower_constant(double eps)
{
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("large_time_lower_constant: eps must be positive");
    return std::sqrt(eps) / (2.0 * std::sqrt(pi) + std::sqrt(2.0 * eps)) * 0.5 * std::exp(-pi * pi / eps);
}

// Randomized Quasi-Monte-Carlo points in [0,1)^dim: a Sobol sequence with a
// seeded Cranley-Patterson rotation.
class ShiftedSobol {
public:
    ShiftedSobol(unsigned dim, std::uint64_t seed) : engine_(dim), shift_(dim)
    {
        RngStream rng(seed, 0x50b01ULL);
        for (double& s : shift_) s = rng.uniform();
    }

    std::vector<double> next()
    {
        std::vector<double> u(shift_.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double v = std::ldexp(static_cast<double>(engine_()), -64);
            const double w = v + shift_[i];
            u[i] = w >= 1.0 ? w - 1.0 : w;
        }
        return u;
    }

private:
    boost::random::sobol engine_;
    std::vector<double> shift_;
};

struct LargeTimeReport {
    int d = 1;
    double eps = 0.0;
    double t = 0.0;
    std::uint64_t seed = 0;
    int n_samples = 0;
    int violations = 0;
    double c_eps = 0.0;
    double C_eps = 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();   // min G_bridge / G(s)
    double max_ratio = 0.0;
    bool pass() const { return violations == 0; }
};

// c_eps^d G(s, z - x0) <= G_{t,x0,x}(s,z) <= C_eps^d G(s, z - x0), s in (0, t/2].
// With lower_constant > 0 that value replaces c_eps.
inline LargeTimeReport check_large_time_bound(double eps, double t, int d, int n_samples,
                                              std::uint64_t seed, const KernelConfig& cfg = {},
                                              double lower_constant = 0.0)
{
    require(d >= 1, "check_large_time_bound: dimension must be at least 1");
    require(t >= eps, "check_large_time_bound: requires t >= eps");
    require(n_samples >= 1, "check_large_time_bound: need at least one sample");
    auto cc = comparison_constants(eps);
    if (lower_constant > 0.0) cc.c_eps = lower_constant;
    LargeTimeReport r;
    r.d = d;
    r.eps = eps;
    r.t = t;
    r.seed = seed;
    r.n_samples = n_samples;
    r.c_eps = cc.c_eps;
    r.C_eps = cc.C_eps;
    const double log_lo = d * std::log(cc.c_eps);
    const double log_hi = d * std::log(cc.C_eps);
    ShiftedSobol points(static_cast<unsigned>(1 + 3 * d), seed);
    std::vector<double> x0(d), x(d), z(d);
    for (int n = 0; n < n_samples; ++n) {
        const auto u = points.next();
        const double s = 0.5 * t * (1.0 - u[0]);
        for (int i = 0; i < d; ++i) {
            x0[i] = -pi + two_pi * u[1 + i];
            x[i] = -pi + two_pi * u[1 + d + i];
            z[i] = -pi + two_pi * u[1 + 2 * d + i];
        }
        // log of G_bridge / G(s, z - x0)
        const double log_ratio = log_heat_kernel(t - s, detail::difference(x, z), cfg) -
                                 log_heat_kernel(t, detail::difference(x, x0), cfg);
        const double tol = 1e-12;
        if (log_ratio < log_lo - tol || log_ratio > log_hi + tol) ++r.violations;
        r.min_ratio = std::min(r.min_ratio, std::exp(log_ratio));
        r.max_ratio = std::max(r.max_ratio, std::exp(log_ratio));
    }
    return r;
}

struct ImageSumReport {
    double bridge = 0.0;
    double image_sum = 0.0;    // (1 + sqrt t)^d sum_{k in Pi^d} p_{t,x0,x+k}(s,z)
    double fitted_C = 0.0;     // bridge / image_sum
};

// Image-sum bound G_{t,x0,x}(s,z) <= C (1 + sqrt t)^d sum_{k in {-2pi,0,2pi}^d} p_{t,x0,x+k}(s,z).
inline ImageSumReport check_image_sum_bound(double t, double s, const std::vector<double>& x0,
                                            const std::vector<double>& x, const std::vector<double>& z,
                                            const KernelConfig& cfg = {})
{
    const BridgeSpec spec{t, x0, x};
    detail::check_bridge_time(spec, s);
    const int d = spec.dim();
    require(static_cast<int>(z.size()) == d, "check_image_sum_bound: dimension mismatch");
    for (int i = 0; i < d; ++i) {
        const double w = z[i] - x0[i];
        if (!(w >= -pi - 1e-12 && w < pi + 1e-12)) throw DomainError("check_image_sum_bound: z - x0 must lie in [-pi, pi)^d");
    }
    const double log_bridge = log_bridge_density_torus(spec, s, z, cfg);
    // log-sum-exp over the 3^d shifted Euclidean bridges
    std::vector<double> logs;
    std::vector<int> idx(d, 0);
    std::vector<double> shifted(d);
    while (true) {
        for (int i = 0; i < d; ++i) shifted[i] = x[i] + two_pi * (idx[i] - 1);
        logs.push_back(log_bridge_density_euclid(BridgeSpec{t, x0, shifted}, s, z));
        int i = 0;
        while (i < d && ++idx[i] > 2) idx[i++] = 0;
        if (i == d) break;
    }
    const double m = *std::max_element(logs.begin(), logs.end());
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - m);
    const double log_image = d * std::log1p(std::sqrt(t)) + m + std::log(acc);
    ImageSumReport r;
    r.bridge = std::exp(log_bridge);
    r.image_sum = std::exp(log_image);
    r.fitted_C = std::exp(log_bridge - log_image);
    return r;
}

struct ImageSweepReport {
    int d = 1;
    int n_samples = 0;
    double t_max = 1.0;
    std::uint64_t seed = 0;
    double fitted_constant = 0.0;   // max of the pointwise constants
    std::vector<double> worst_point;  // (t, s, x0, x, z) of the maximum
};

// Sweep over t in (0, t_max], s in (0, t), x0, x in T^d and z - x0 in [-pi, pi)^d.
inline ImageSweepReport image_sum_sweep(int d, int n_samples, double t_max, std::uint64_t seed,
                                        const KernelConfig& cfg = {})
{
    require(d >= 1 && n_samples >= 1 && t_max > 0.0, "image_sum_sweep: invalid arguments");
    ImageSweepReport r;
    r.d = d;
    r.n_samples = n_samples;
    r.t_max = t_max;
    r.seed = seed;
    ShiftedSobol points(static_cast<unsigned>(2 + 3 * d), seed);
    std::vector<double> x0(d), x(d), z(d);
    for (int n = 0; n < n_samples; ++n) {
        const auto u = points.next();
        const double t = t_max * (1.0 - u[0]);
        const double s = t * std::clamp(u[1], 1e-9, 1.0 - 1e-9);
        for (int i = 0; i < d; ++i) {
            x0[i] = -pi + two_pi * u[2 + i];
            x[i] = -pi + two_pi * u[2 + d + i];
            z[i] = x0[i] - pi + two_pi * u[2 + 2 * d + i];
        }
        const auto rep = check_image_sum_bound(t, s, x0, x, z, cfg);
        if (rep.fitted_C > r.fitted_constant) {
            r.fitted_constant = rep.fitted_C;
            r.worst_point = {t, s};
            r.worst_point.insert(r.worst_point.end(), x0.begin(), x0.end());
            r.worst_point.insert(r.worst_point.end(), x.begin(), x.end());
            r.worst_point.insert(r.worst_point.end(), z.begin(), z.end());
        }
    }
    return r;
}

}  // namespace tpam
