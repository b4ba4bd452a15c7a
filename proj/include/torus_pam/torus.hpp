/*
 * torus.hpp - geometry of the flat torus T^d = [-pi, pi)^d.
 *
 * Points are stored as their representative in [-pi, pi)^d.  The signed
 * remainder uses the positive-remainder convention, so pi maps to -pi.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace tpam {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// mod(x + pi, 2 pi) - pi, the representative of x in [-pi, pi).
inline double signed_mod(double x)
{
    if (!std::isfinite(x)) throw DomainError("signed_mod: non-finite input");
    if (x >= -pi && x < pi) return x;
    double r = std::fmod(x + pi, two_pi);
    if (r < 0.0) r += two_pi;
    r -= pi;
    if (r >= pi) r -= two_pi;
    return r;
}

// (2 pi)^(-d), the density of the uniform probability measure on T^d.
inline double uniform_density(int d) { return std::pow(two_pi, -d); }

class TorusPoint {
public:
    TorusPoint() = default;

    explicit TorusPoint(std::vector<double> coords) : coords_(std::move(coords))
    {
        require(!coords_.empty(), "TorusPoint: dimension must be at least 1");
        for (double& c : coords_) c = signed_mod(c);
    }

    explicit TorusPoint(std::initializer_list<double> coords)
        : TorusPoint(std::vector<double>(coords))
    {}

    static TorusPoint origin(int d) { return TorusPoint(std::vector<double>(d, 0.0)); }

    int dim() const { return static_cast<int>(coords_.size()); }
    double operator[](std::size_t i) const { return coords_[i]; }
    const std::vector<double>& coords() const { return coords_; }

    // Componentwise difference reduced to [-pi, pi)^d.
    TorusPoint operator-(const TorusPoint& other) const
    {
        require(dim() == other.dim(), "TorusPoint: dimension mismatch");
        std::vector<double> diff(coords_.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = coords_[i] - other.coords_[i];
        return TorusPoint(std::move(diff));
    }

    TorusPoint operator-() const
    {
        std::vector<double> neg(coords_.size());
        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -coords_[i];
        return TorusPoint(std::move(neg));
    }

    double norm() const
    {
        double s = 0.0;
        for (double c : coords_) s += c * c;
        return std::sqrt(s);
    }

private:
    std::vector<double> coords_;
};

// Euclidean length of the signed-mod representative of x - y.
inline double torus_distance(const TorusPoint& x, const TorusPoint& y)
{
    require(x.dim() == y.dim(), "torus_distance: dimension mismatch");
    return (x - y).norm();
}

}  // namespace tpam
