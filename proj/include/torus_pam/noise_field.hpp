/*
 * noise_field.hpp - space-time increments of the colored noise on a grid.
 *
 * One increment over a step dt is
 *   dW(x) = sum_{|k|_inf <= K} sqrt(dt (2pi)^{-d/2} theta_k) xi_k e^{ik.x},
 * with xi_0 ~ N(0,1), xi_{-k} = conj(xi_k), and Re xi_k, Im xi_k independent
 * N(0, 1/2) on a half-lattice.  Then E[dW(x) dW(y)] = dt f_K(x - y), where
 * f_K is the covariance series truncated to the same cube.
 *
 * Grid points are x_j = -pi + j h with h = 2pi/N; the shift to -pi becomes
 * the phase (-1)^{k_1 + ... + k_d} on each coefficient.
 */

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "covariance.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "rng.hpp"
#include "torus.hpp"

namespace tpam {

struct NoiseIncrement {
    int d = 1;
    int grid_n = 0;
    double dt = 0.0;
    std::string seed_state;
    std::vector<double> values;     // N^d, axis 0 fastest
    double imag_residue = 0.0;      // max |Im| of the synthesized field
};

// Index helpers for the centered coefficient cube |k|_inf <= K (axis 0 fastest).
struct ModeCube {
    int d = 1;
    int K = 0;

    int side() const { return 2 * K + 1; }

    std::size_t size() const
    {
        std::size_t s = 1;
        for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(side());
        return s;
    }

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
            k[i] = static_cast<int>(idx % static_cast<std::size_t>(side())) - K;
            idx /= static_cast<std::size_t>(side());
        }
        return k;
    }

    // Index of -k.
    std::size_t mirror(std::size_t idx) const { return size() - 1 - idx; }
};

// First nonzero coordinate positive.
inline bool in_half_lattice(const std::vector<int>& k)
{
    for (int c : k)
        if (c != 0) return c > 0;
    return false;
}

// Places centered coefficients c_k on an n^d FFT grid so that a backward
// transform yields sum_k c_k e^{ik.x_j} at x_j = -pi + j h.
inline void scatter_to_grid(const ModeCube& cube, const std::vector<std::complex<double>>& coeffs, int n,
                            std::vector<std::complex<double>>& grid)
{
    std::size_t total = 1;
    for (int i = 0; i < cube.d; ++i) total *= static_cast<std::size_t>(n);
    grid.assign(total, {0.0, 0.0});
    for (std::size_t idx = 0; idx < cube.size(); ++idx) {
        const auto k = cube.mode(idx);
        std::size_t g = 0, stride = 1;
        int parity = 0;
        for (int i = 0; i < cube.d; ++i) {
            g += static_cast<std::size_t>(((k[i] % n) + n) % n) * stride;
            stride *= static_cast<std::size_t>(n);
            parity += k[i];
        }
        grid[g] += (parity % 2 == 0) ? coeffs[idx] : -coeffs[idx];
    }
}

// Inverse of scatter_to_grid after a forward transform: reads the centered
// coefficients of a grid field (the forward result divided by n^d).
inline void gather_from_grid(const ModeCube& cube, const std::vector<std::complex<double>>& grid, int n,
                             std::vector<std::complex<double>>& coeffs)
{
    coeffs.assign(cube.size(), {0.0, 0.0});
    double scale = 1.0;
    for (int i = 0; i < cube.d; ++i) scale /= n;
    for (std::size_t idx = 0; idx < cube.size(); ++idx) {
        const auto k = cube.mode(idx);
        std::size_t g = 0, stride = 1;
        int parity = 0;
        for (int i = 0; i < cube.d; ++i) {
            g += static_cast<std::size_t>(((k[i] % n) + n) % n) * stride;
            stride *= static_cast<std::size_t>(n);
            parity += k[i];
        }
        const std::complex<double> v = grid[g] * scale;
        coeffs[idx] = (parity % 2 == 0) ? v : -v;
    }
}

class NoiseSampler {
public:
    NoiseSampler(const NoiseSpec& spec, const SpectralWeights& weights, double dt, int grid_n)
        : spec_(spec), cube_{weights.d, weights.K}, dt_(dt), grid_n_(grid_n)
    {
        spec.validate();
        require(weights.d == spec.d, "NoiseSampler: weights dimension differs from spec");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("NoiseSampler: dt must be positive");
        if (grid_n < 2 * weights.K + 1)
            throw AliasingError("NoiseSampler: grid_n = " + std::to_string(grid_n) +
                                " cannot represent modes up to K = " + std::to_string(weights.K) +
                                " (need grid_n >= 2K+1)");
        amplitude_.resize(cube_.size());
        const double norm = std::pow(two_pi, -0.5 * spec.d);
        for (std::size_t i = 0; i < cube_.size(); ++i) {
            require(weights.theta[i] >= 0.0, "NoiseSampler: weights must be nonnegative");
            amplitude_[i] = std::sqrt(dt * norm * weights.theta[i]);
        }
        backward_ = std::make_shared<const FftPlan>(cube_.d, grid_n_, FFTW_BACKWARD);
    }

    const ModeCube& cube() const { return cube_; }
    double dt() const { return dt_; }
    int grid_n() const { return grid_n_; }
    const NoiseSpec& spec() const { return spec_; }

    // Centered coefficients c_k of one increment; the field is sum_k c_k e^{ik.x}.
    void sample_coefficients(RngStream& rng, std::vector<std::complex<double>>& c) const
    {
        c.assign(cube_.size(), {0.0, 0.0});
        const std::size_t zero = cube_.size() / 2;
        // Draws follow the index order so a stream's output is layout-stable.
        for (std::size_t idx = 0; idx < cube_.size(); ++idx) {
            if (idx == zero) {
                c[idx] = amplitude_[idx] * rng.gaussian();
                continue;
            }
            if (idx < zero) continue;   // the mirror of a lower index
            const double re = rng.gaussian() * std::sqrt(0.5);
            const double im = rng.gaussian() * std::sqrt(0.5);
            c[idx] = amplitude_[idx] * std::complex<double>(re, im);
            c[cube_.mirror(idx)] = std::conj(c[idx]);
        }
    }

    NoiseIncrement sample(RngStream& rng) const
    {
        std::vector<std::complex<double>> c;
        sample_coefficients(rng, c);
        return synthesize(c, rng.key().token());
    }

    NoiseIncrement synthesize(const std::vector<std::complex<double>>& c, const std::string& token) const
    {
        std::vector<std::complex<double>> grid;
        scatter_to_grid(cube_, c, grid_n_, grid);
        backward_->execute(grid);
        NoiseIncrement inc;
        inc.d = cube_.d;
        inc.grid_n = grid_n_;
        inc.dt = dt_;
        inc.seed_state = token;
        inc.values.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            inc.values[i] = grid[i].real();
            inc.imag_residue = std::max(inc.imag_residue, std::abs(grid[i].imag()));
        }
        return inc;
    }

private:
    NoiseSpec spec_;
    ModeCube cube_;
    double dt_;
    int grid_n_;
    std::vector<double> amplitude_;
    std::shared_ptr<const FftPlan> backward_;
};

inline NoiseIncrement sample_increment(const NoiseSpec& spec, const SpectralWeights& weights, double dt,
                                       int grid_n, RngStream& rng)
{
    return NoiseSampler(spec, weights, dt, grid_n).sample(rng);
}

inline std::vector<double> grid_coordinate(int grid_n)
{
    std::vector<double> x(grid_n);
    for (int j = 0; j < grid_n; ++j) x[j] = -pi + two_pi * j / grid_n;
    return x;
}

// sum_n <dW_n, phi>_grid with the periodic trapezoidal rule.
inline double wiener_functional(const std::vector<NoiseIncrement>& increments, const std::vector<double>& phi)
{
    if (increments.empty()) return 0.0;
    const auto& first = increments.front();
    require(phi.size() == first.values.size(), "wiener_functional: test function does not match the grid");
    const double cell = std::pow(two_pi / first.grid_n, first.d);
    double total = 0.0;
    for (const auto& inc : increments) {
        if (inc.grid_n != first.grid_n || inc.d != first.d || inc.dt != first.dt)
            throw DomainError("wiener_functional: increments must share grid and dt");
        double s = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) s += inc.values[i] * phi[i];
        total += s * cell;
    }
    return total;
}

struct CovarianceCheck {
    int grid_n = 0;
    int K = 0;
    int n_samples = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> estimate;      // (N x N) sample covariance for d = 1
    std::vector<double> target;        // dt f_K(x_i - x_j)
    std::vector<double> std_err;
    double max_abs_deviation = 0.0;
    double max_deviation_se = 0.0;     // worst |estimate - target| / std_err
    double max_deviation_full = 0.0;   // worst |estimate - dt f(x_i - x_j)| off the diagonal, untruncated f
    double max_imag_residue = 0.0;
};

// Sample covariance of grid values over independent increments (known zero
// mean) against dt times the truncated covariance; d = 1.
inline CovarianceCheck empirical_covariance(const NoiseSpec& spec, double dt, int grid_n, int K, int n_samples,
                                            std::uint64_t seed)
{
    require(spec.d == 1, "empirical_covariance: implemented for d = 1");
    require(n_samples >= 2, "empirical_covariance: need at least two samples");
    const auto weights = make_weights(spec, K);
    const NoiseSampler sampler(spec, weights, dt, grid_n);
    const int n = grid_n;
    std::vector<double> sum_xy(static_cast<std::size_t>(n) * n, 0.0), sum_xy2(sum_xy.size(), 0.0);
    CovarianceCheck r;
    r.grid_n = n;
    r.K = K;
    r.n_samples = n_samples;
    r.dt = dt;
    r.seed = seed;
    for (int s = 0; s < n_samples; ++s) {
        RngStream rng(seed, static_cast<std::uint64_t>(s));
        const auto inc = sampler.sample(rng);
        r.max_imag_residue = std::max(r.max_imag_residue, inc.imag_residue);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double p = inc.values[i] * inc.values[j];
                sum_xy[i * n + j] += p;
                sum_xy2[i * n + j] += p * p;
            }
    }
    const auto x = grid_coordinate(n);
    r.estimate.resize(sum_xy.size());
    r.target.resize(sum_xy.size());
    r.std_err.resize(sum_xy.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * n + j;
            const double m = sum_xy[idx] / n_samples;
            const double var = std::max(sum_xy2[idx] / n_samples - m * m, 0.0);
            r.estimate[idx] = m;
            r.std_err[idx] = std::sqrt(var / (n_samples - 1));
            r.target[idx] = dt * covariance_truncated(spec, {x[i] - x[j]}, K);
            const double dev = std::abs(m - r.target[idx]);
            r.max_abs_deviation = std::max(r.max_abs_deviation, dev);
            if (r.std_err[idx] > 0.0) r.max_deviation_se = std::max(r.max_deviation_se, dev / r.std_err[idx]);
            if (i != j) {
                const double full = dt * covariance_eval(spec, std::vector<double>{x[i] - x[j]}).value;
                r.max_deviation_full = std::max(r.max_deviation_full, std::abs(m - full));
            }
        }
    return r;
}

struct FunctionalVariance {
    double variance = 0.0;      // sample variance with the mean known to be 0
    double std_err = 0.0;       // variance * sqrt(2 / n) for Gaussian samples
    double target = 0.0;        // t rho (2pi)^d
    double t = 0.0;
    int n_samples = 0;
    std::uint64_t seed = 0;
};

// Variance of W(t, 1) = sum over `steps` increments of <dW_n, 1>.  Only the
// constant mode contributes, so the target is t rho (2pi)^d.
inline FunctionalVariance constant_functional_variance(const NoiseSpec& spec, double dt, int steps, int grid_n,
                                                       int K, int n_samples, std::uint64_t seed)
{
    require(steps >= 1 && n_samples >= 2, "constant_functional_variance: need steps >= 1 and n_samples >= 2");
    const NoiseSampler sampler(spec, make_weights(spec, K), dt, grid_n);
    std::size_t total = 1;
    for (int i = 0; i < spec.d; ++i) total *= static_cast<std::size_t>(grid_n);
    const std::vector<double> one(total, 1.0);
    double sum2 = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        std::vector<NoiseIncrement> incs;
        for (int k = 0; k < steps; ++k) {
            RngStream rng(seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(k));
            incs.push_back(sampler.sample(rng));
        }
        const double v = wiener_functional(incs, one);
        sum2 += v * v;
    }
    FunctionalVariance r;
    r.t = dt * steps;
    r.n_samples = n_samples;
    r.seed = seed;
    r.variance = sum2 / n_samples;
    r.std_err = r.variance * std::sqrt(2.0 / n_samples);
    r.target = r.t * spec.rho * std::pow(two_pi, spec.d);
    return r;
}

}  // namespace tpam
