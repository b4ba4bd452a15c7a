/*
 * lattice.hpp - sums of radial functions over the punctured lattice Z^d \ {0}.
 *
 * Lattice points are grouped into shells of equal |k|^2.  Sums over a ball
 * |k| <= R can be completed by a continuum tail
 *     omega_d int_{R_eff}^inf r^{d-1} g(r^2) dr,
 * where R_eff is the radius whose ball volume equals the number of lattice
 * points kept (for d = 1 this is K + 1/2, the midpoint rule).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "errors.hpp"
#include "torus.hpp"

namespace tpam {

struct Shell {
    std::int64_t q = 0;  // |k|^2
    double count = 0.0;  // number of lattice points with this |k|^2
};

inline double unit_sphere_area(int d) { return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d); }
inline double unit_ball_volume(int d) { return std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0); }

namespace detail {

// Visits nonnegative coordinate vectors with |k|_inf <= K and |k|^2 <= qmax,
// weighting each by the 2^{#nonzero} sign choices.
inline void visit_octant(int d, int K, std::int64_t qmax, int axis, std::int64_t q, double weight,
                         std::vector<Shell>& out)
{
    if (axis == d) {
        if (q > 0) out.push_back({q, weight});
        return;
    }
    for (int k = 0; k <= K; ++k) {
        const std::int64_t qk = q + static_cast<std::int64_t>(k) * k;
        if (qk > qmax) break;
        visit_octant(d, K, qmax, axis + 1, qk, k == 0 ? weight : 2.0 * weight, out);
    }
}

inline std::vector<Shell> merge_shells(std::vector<Shell> raw)
{
    std::sort(raw.begin(), raw.end(), [](const Shell& a, const Shell& b) { return a.q < b.q; });
    std::vector<Shell> out;
    for (const Shell& s : raw) {
        if (!out.empty() && out.back().q == s.q)
            out.back().count += s.count;
        else
            out.push_back(s);
    }
    return out;
}

}  // namespace detail

// Shells of the cube |k|_inf <= K, origin excluded.
inline std::vector<Shell> cube_shells(int d, int K)
{
    require(d >= 1 && K >= 0, "cube_shells: need d >= 1 and K >= 0");
    std::vector<Shell> raw;
    detail::visit_octant(d, K, INT64_MAX, 0, 0, 1.0, raw);
    return detail::merge_shells(std::move(raw));
}

// Shells of the ball |k| <= R, origin excluded.
inline std::vector<Shell> ball_shells(int d, double R)
{
    require(d >= 1 && R >= 0.0, "ball_shells: need d >= 1 and R >= 0");
    const int K = static_cast<int>(std::floor(R));
    const auto qmax = static_cast<std::int64_t>(std::floor(R * R + 1e-9));
    std::vector<Shell> raw;
    detail::visit_octant(d, K, qmax, 0, 0, 1.0, raw);
    return detail::merge_shells(std::move(raw));
}

class RadialLattice {
public:
    RadialLattice(int d, double R) : d_(d), R_(R), shells_(ball_shells(d, R))
    {
        double points = 1.0;
        for (const Shell& s : shells_) points += s.count;
        r_eff_ = std::pow(points / unit_ball_volume(d), 1.0 / d);
    }

    int dim() const { return d_; }
    double radius() const { return R_; }
    double effective_radius() const { return r_eff_; }
    const std::vector<Shell>& shells() const { return shells_; }

    // sum_{0 < |k| <= R} g(|k|^2).
    template <class G>
    double partial_sum(G&& g) const
    {
        double s = 0.0;
        for (auto it = shells_.rbegin(); it != shells_.rend(); ++it)
            s += it->count * g(static_cast<double>(it->q));
        return s;
    }

    // omega_d int_{R_eff}^inf r^{d-1} g(r^2) dr.
    template <class G>
    double tail(G&& g) const
    {
        const double omega = unit_sphere_area(d_);
        boost::math::quadrature::exp_sinh<double> integrator;
        const int d = d_;
        auto integrand = [&](double r) { return std::pow(r, d - 1) * g(r * r); };
        double err = 0.0;
        const double v =
            integrator.integrate(integrand, r_eff_, std::numeric_limits<double>::infinity(), 1e-12, &err);
        return omega * v;
    }

    // Ball sum plus continuum tail.
    template <class G>
    double sum(G&& g) const
    {
        return partial_sum(g) + tail(g);
    }

private:
    int d_;
    double R_;
    std::vector<Shell> shells_;
    double r_eff_ = 0.0;
};

}  // namespace tpam
