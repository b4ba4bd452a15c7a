/*
 * pam_solver.hpp - spectral exponential-Euler scheme for
 *   du = (1/2) Lap u dt + lambda u dW,   u(0) = mu,
 * in mild form.  The state is the centered coefficient cube |k|_inf <= K of
 * u(x) = sum_k u_k e^{ik.x}.  One step over [t_n, t_n + dt) reads
 *   u_{n+1}(k) = e^{-|k|^2 dt/2} ( u_n(k) + lambda F[u_n dW_n](k) ),
 * with dW_n drawn independently of u_n (Ito, left point).  The product is
 * formed on a grid of P >= 3K+1 points per axis when dealiasing is on, so
 * that the retained modes of u_n dW_n are exact.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "covariance.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "heat_kernel.hpp"
#include "noise_field.hpp"
#include "rng.hpp"
#include "torus.hpp"

namespace tpam {

struct InitialMeasure {
    enum class Kind { uniform, density, atoms, delta };

    Kind kind = Kind::uniform;
    int d = 1;
    double mass = 1.0;                 // uniform: total mass
    int density_grid_n = 0;            // density: grid values at x_j = -pi + j h, axis 0 fastest
    std::vector<double> density;
    std::vector<std::pair<std::vector<double>, double>> atoms;   // (point, mass)
    std::vector<double> x0;            // delta: location
    double t0 = 0.0;                   // delta: smoothing time (0 selects the solver's dt)

    static InitialMeasure make_uniform(int d, double mass)
    {
        InitialMeasure m;
        m.kind = Kind::uniform;
        m.d = d;
        m.mass = mass;
        m.validate();
        return m;
    }

    static InitialMeasure make_density(int d, int grid_n, std::vector<double> values)
    {
        InitialMeasure m;
        m.kind = Kind::density;
        m.d = d;
        m.density_grid_n = grid_n;
        m.density = std::move(values);
        m.validate();
        return m;
    }

    static InitialMeasure make_atoms(int d, std::vector<std::pair<std::vector<double>, double>> atoms)
    {
        InitialMeasure m;
        m.kind = Kind::atoms;
        m.d = d;
        m.atoms = std::move(atoms);
        m.validate();
        return m;
    }

    static InitialMeasure make_delta(std::vector<double> x0, double t0 = 0.0)
    {
        InitialMeasure m;
        m.kind = Kind::delta;
        m.d = static_cast<int>(x0.size());
        m.x0 = std::move(x0);
        m.t0 = t0;
        m.validate();
        return m;
    }

    void validate() const
    {
        require(d >= 1, "InitialMeasure: dimension must be at least 1");
        switch (kind) {
        case Kind::uniform:
            require(mass >= 0.0 && std::isfinite(mass), "InitialMeasure: mass must be nonnegative");
            break;
        case Kind::density: {
            require(density_grid_n >= 1, "InitialMeasure: density grid must be nonempty");
            std::size_t total = 1;
            for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(density_grid_n);
            require(density.size() == total, "InitialMeasure: density size does not match grid");
            for (double v : density) require(v >= 0.0 && std::isfinite(v), "InitialMeasure: density must be nonnegative");
            break;
        }
        case Kind::atoms:
            for (const auto& [p, m] : atoms) {
                require(static_cast<int>(p.size()) == d, "InitialMeasure: atom dimension mismatch");
                require(m >= 0.0 && std::isfinite(m), "InitialMeasure: atom masses must be nonnegative");
            }
            break;
        case Kind::delta:
            require(static_cast<int>(x0.size()) == d, "InitialMeasure: delta location dimension mismatch");
            require(t0 >= 0.0, "InitialMeasure: smoothing time must be nonnegative");
            break;
        }
    }

    // C_mu.
    double total_mass() const
    {
        switch (kind) {
        case Kind::uniform: return mass;
        case Kind::density: {
            double s = 0.0;
            for (double v : density) s += v;
            return s * std::pow(two_pi / density_grid_n, d);
        }
        case Kind::atoms: {
            double s = 0.0;
            for (const auto& a : atoms) s += a.second;
            return s;
        }
        case Kind::delta: return 1.0;
        }
        return 0.0;
    }

    bool is_bounded_density() const { return kind == Kind::uniform || kind == Kind::density; }

    std::string kind_name() const
    {
        switch (kind) {
        case Kind::uniform: return "uniform";
        case Kind::density: return "density";
        case Kind::atoms: return "atoms";
        case Kind::delta: return "delta";
        }
        return "";
    }
};

namespace detail {

// Coefficients m_k = (2pi)^{-d} int e^{-ik.y} mu(dy) on a cube; density data
// use the trapezoidal rule, with the Nyquist mode of an even grid split evenly.
inline std::vector<std::complex<double>> measure_coefficients(const InitialMeasure& mu, const ModeCube& cube)
{
    const int d = mu.d;
    std::vector<std::complex<double>> c(cube.size(), {0.0, 0.0});
    const double norm = std::pow(two_pi, -d);
    switch (mu.kind) {
    case InitialMeasure::Kind::uniform:
        c[cube.size() / 2] = mu.mass * norm;
        break;
    case InitialMeasure::Kind::atoms:
    case InitialMeasure::Kind::delta: {
        std::vector<std::pair<std::vector<double>, double>> pts = mu.atoms;
        if (mu.kind == InitialMeasure::Kind::delta) pts = {{mu.x0, 1.0}};
        for (std::size_t idx = 0; idx < cube.size(); ++idx) {
            const auto k = cube.mode(idx);
            std::complex<double> s = 0.0;
            for (const auto& [y, m] : pts) {
                double phase = 0.0;
                for (int i = 0; i < d; ++i) phase += k[i] * y[i];
                s += m * std::polar(1.0, -phase);
            }
            c[idx] = s * norm;
        }
        break;
    }
    case InitialMeasure::Kind::density: {
        const int n = mu.density_grid_n;
        FftPlan forward(d, n, FFTW_FORWARD);
        std::vector<std::complex<double>> grid(mu.density.begin(), mu.density.end());
        forward.execute(grid);
        std::vector<std::complex<double>> gathered;
        gather_from_grid(cube, grid, n, gathered);
        // gathered holds the averages (1/n^d) sum_j v_j e^{-ik.x_j}, i.e. (2pi)^{-d} int v e^{-ik.y}.
        for (std::size_t idx = 0; idx < cube.size(); ++idx) {
            const auto k = cube.mode(idx);
            double w = 1.0;
            for (int i = 0; i < d; ++i) {
                if (2 * std::abs(k[i]) > n) w = 0.0;
                else if (2 * std::abs(k[i]) == n) w *= 0.5;
            }
            c[idx] = w * gathered[idx];
        }
        break;
    }
    }
    return c;
}

inline double mode_norm2(const std::vector<int>& k)
{
    double q = 0.0;
    for (int c : k) q += static_cast<double>(c) * c;
    return q;
}

inline double eval_coefficients(const ModeCube& cube, const std::vector<std::complex<double>>& c,
                                const std::vector<double>& x)
{
    double s = 0.0;
    for (std::size_t idx = 0; idx < cube.size(); ++idx) {
        if (c[idx] == std::complex<double>(0.0, 0.0)) continue;
        const auto k = cube.mode(idx);
        double phase = 0.0;
        for (int i = 0; i < cube.d; ++i) phase += k[i] * x[i];
        s += (c[idx] * std::polar(1.0, phase)).real();
    }
    return s;
}

}  // namespace detail

// J0(t,x) = int G(t, x - y) mu(dy).
inline double j0(double t, const std::vector<double>& x, const InitialMeasure& mu, const KernelConfig& cfg = {})
{
    detail::check_time(t, "j0");
    mu.validate();
    require(static_cast<int>(x.size()) == mu.d, "j0: dimension mismatch");
    const int d = mu.d;
    auto diff = [&](const std::vector<double>& y) {
        std::vector<double> w(d);
        for (int i = 0; i < d; ++i) w[i] = x[i] - y[i];
        return w;
    };
    switch (mu.kind) {
    case InitialMeasure::Kind::uniform: return mu.mass * uniform_density(d);
    case InitialMeasure::Kind::delta: return heat_kernel(t, diff(mu.x0), cfg);
    case InitialMeasure::Kind::atoms: {
        double s = 0.0;
        for (const auto& [y, m] : mu.atoms) s += m * heat_kernel(t, diff(y), cfg);
        return s;
    }
    case InitialMeasure::Kind::density: {
        const int n = mu.density_grid_n;
        const ModeCube cube{d, n / 2};
        auto c = detail::measure_coefficients(mu, cube);
        for (std::size_t idx = 0; idx < cube.size(); ++idx)
            c[idx] *= std::exp(-0.5 * t * detail::mode_norm2(cube.mode(idx)));
        return detail::eval_coefficients(cube, c, x);
    }
    }
    return 0.0;
}

template <std::same_as<TorusPoint> Point>
double j0(double t, const Point& x, const InitialMeasure& mu, const KernelConfig& cfg = {})
{
    return j0(t, x.coords(), mu, cfg);
}

struct SolverConfig {
    int grid_n = 64;          // output grid points per axis
    int mode_k = 21;          // spectral cutoff |k|_inf <= mode_k
    int noise_mode_k = -1;    // noise cutoff; -1 follows mode_k, 0 keeps only the constant mode
    double dt = 1e-3;
    double T = 1.0;
    bool dealias = true;
    int output_every = 0;     // steps between stored fields; 0 stores the final field only
    NoiseSpec spec;

    int noise_cutoff() const { return noise_mode_k < 0 ? mode_k : std::min(noise_mode_k, mode_k); }

    void validate() const
    {
        spec.validate();
        require(mode_k >= 0, "SolverConfig: mode_k must be nonnegative");
        if (grid_n < 2 * mode_k + 1)
            throw AliasingError("SolverConfig: grid_n = " + std::to_string(grid_n) + " < 2 mode_k + 1 = " +
                                std::to_string(2 * mode_k + 1));
        if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("SolverConfig: dt must be positive");
        if (!(T >= dt)) throw DomainError("SolverConfig: horizon T must be at least dt");
        require(output_every >= 0, "SolverConfig: output_every must be nonnegative");
    }

    // Grid used for the product u dW.
    int product_grid() const { return dealias ? smooth_size(3 * mode_k + 1) : grid_n; }
};

inline double start_time(const SolverConfig& cfg, const InitialMeasure& mu)
{
    switch (mu.kind) {
    case InitialMeasure::Kind::delta: return mu.t0 > 0.0 ? mu.t0 : cfg.dt;
    case InitialMeasure::Kind::atoms: return cfg.dt;
    default: return 0.0;
    }
}

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> fields;   // grid_n^d, axis 0 fastest
    std::uint64_t seed = 0;
    std::uint64_t path = 0;
    SolverConfig config;
    double max_imag_residue = 0.0;
    std::size_t positivity_violations = 0;     // negative grid values seen in stored fields
};

// One path of the scheme; shares plans and weights across paths.
class PamSolver {
public:
    PamSolver(const SolverConfig& cfg, const InitialMeasure& mu)
        : cfg_(cfg), mu_(mu), cube_{cfg.spec.d, cfg.mode_k}
    {
        cfg_.validate();
        mu_.validate();
        require(mu_.d == cfg_.spec.d, "PamSolver: measure and noise dimensions differ");
        if (cfg_.spec.lambda != 0.0) require_dalang(cfg_.spec);
        P_ = cfg_.product_grid();
        weights_ = make_weights(cfg_.spec, cfg_.mode_k, cfg_.noise_cutoff());
        sampler_ = std::make_unique<NoiseSampler>(cfg_.spec, weights_, cfg_.dt, P_);
        backward_ = std::make_unique<FftPlan>(cube_.d, P_, FFTW_BACKWARD);
        forward_ = std::make_unique<FftPlan>(cube_.d, P_, FFTW_FORWARD);
        out_backward_ = std::make_unique<FftPlan>(cube_.d, cfg_.grid_n, FFTW_BACKWARD);
        t_start_ = start_time(cfg_, mu_);
        steps_ = static_cast<long>(std::llround((cfg_.T - t_start_) / cfg_.dt));
        require(steps_ >= 0, "PamSolver: horizon precedes the start time");
        decay_.resize(cube_.size());
        for (std::size_t idx = 0; idx < cube_.size(); ++idx)
            decay_[idx] = std::exp(-0.5 * cfg_.dt * detail::mode_norm2(cube_.mode(idx)));
        initial_ = detail::measure_coefficients(mu_, cube_);
        if (t_start_ > 0.0)
            for (std::size_t idx = 0; idx < cube_.size(); ++idx)
                initial_[idx] *= std::exp(-0.5 * t_start_ * detail::mode_norm2(cube_.mode(idx)));
    }

    const SolverConfig& config() const { return cfg_; }
    const ModeCube& cube() const { return cube_; }
    double start() const { return t_start_; }
    long steps() const { return steps_; }
    double time_at(long n) const { return t_start_ + static_cast<double>(n) * cfg_.dt; }
    const std::vector<std::complex<double>>& initial_coefficients() const { return initial_; }

    // Advances coefficients by one step with the given noise coefficients
    // (centered cube of the noise cutoff).
    void step(std::vector<std::complex<double>>& u, const std::vector<std::complex<double>>& noise) const
    {
        std::vector<std::complex<double>> gu, gw, f;
        scatter_to_grid(cube_, u, P_, gu);
        scatter_to_grid(cube_, noise, P_, gw);
        backward_->execute(gu);
        backward_->execute(gw);
        for (std::size_t i = 0; i < gu.size(); ++i) gu[i] = gu[i].real() * gw[i].real();
        forward_->execute(gu);
        gather_from_grid(cube_, gu, P_, f);
        const double lambda = cfg_.spec.lambda;
        const std::size_t n = cube_.size();
        for (std::size_t idx = 0; idx < n; ++idx) {
            const std::size_t mirror = cube_.mirror(idx);
            if (mirror < idx) continue;
            const std::complex<double> fk = 0.5 * (f[idx] + std::conj(f[mirror]));
            u[idx] = decay_[idx] * (u[idx] + lambda * fk);
            if (mirror != idx)
                u[mirror] = std::conj(u[idx]);
            else
                u[idx] = u[idx].real();
        }
    }

    // Advances one step, drawing the increment from rng.
    void step(std::vector<std::complex<double>>& u, RngStream& rng) const
    {
        std::vector<std::complex<double>> noise;
        sampler_->sample_coefficients(rng, noise);
        step(u, noise);
    }

    double evaluate(const std::vector<std::complex<double>>& u, const std::vector<double>& x) const
    {
        return detail::eval_coefficients(cube_, u, x);
    }

    // Field on the output grid; records the imaginary residue.
    std::vector<double> field(const std::vector<std::complex<double>>& u, double* imag_residue = nullptr) const
    {
        std::vector<std::complex<double>> grid;
        scatter_to_grid(cube_, u, cfg_.grid_n, grid);
        out_backward_->execute(grid);
        std::vector<double> v(grid.size());
        double res = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            v[i] = grid[i].real();
            res = std::max(res, std::abs(grid[i].imag()));
        }
        if (imag_residue) *imag_residue = res;
        return v;
    }

    Trajectory solve(std::uint64_t seed, std::uint64_t path = 0) const
    {
        Trajectory tr;
        tr.seed = seed;
        tr.path = path;
        tr.config = cfg_;
        RngStream rng(seed, path);
        auto u = initial_;
        auto record = [&](long n) {
            double res = 0.0;
            auto f = field(u, &res);
            tr.max_imag_residue = std::max(tr.max_imag_residue, res);
            for (double v : f)
                if (v < 0.0) ++tr.positivity_violations;
            tr.times.push_back(time_at(n));
            tr.fields.push_back(std::move(f));
        };
        record(0);
        for (long n = 1; n <= steps_; ++n) {
            step(u, rng);
            if ((cfg_.output_every > 0 && n % cfg_.output_every == 0) || n == steps_)
                if (tr.times.back() != time_at(n)) record(n);
        }
        return tr;
    }

private:
    SolverConfig cfg_;
    InitialMeasure mu_;
    ModeCube cube_;
    int P_ = 0;
    SpectralWeights weights_;
    std::unique_ptr<NoiseSampler> sampler_;
    std::unique_ptr<FftPlan> backward_;
    std::unique_ptr<FftPlan> forward_;
    std::unique_ptr<FftPlan> out_backward_;
    double t_start_ = 0.0;
    long steps_ = 0;
    std::vector<double> decay_;
    std::vector<std::complex<double>> initial_;
};

}  // namespace tpam
