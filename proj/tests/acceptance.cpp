// Acceptance run: one PASS/FAIL line per criterion, with the measured
// quantities and wall time.  Exit status 0 when every criterion passes.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "torus_pam.hpp"

using namespace tpam;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

NoiseSpec make_spec(int d, double alpha, double rho, double lambda = 1.0)
{
    NoiseSpec s;
    s.d = d;
    s.alpha = alpha;
    s.rho = rho;
    s.lambda = lambda;
    return s;
}

double log_uniform(RngStream& rng, double lo, double hi)
{
    return lo * std::pow(hi / lo, rng.uniform());
}

std::vector<double> random_point(RngStream& rng, int d)
{
    std::vector<double> x(d);
    for (double& v : x) v = -pi + two_pi * rng.uniform();
    return x;
}

const int threads = default_thread_count();

// 1. Spectral and image series agree.
Outcome dual_series()
{
    double worst = 0.0;
    for (int d = 1; d <= 2; ++d) {
        RngStream rng(11, d);
        for (int i = 0; i < 1000; ++i) {
            const double t = log_uniform(rng, 0.05, 20.0);
            const auto x = random_point(rng, d);
            double spectral = 1.0, image = 1.0;
            for (double xi : x) {
                spectral *= heat_kernel_spectral_1d(t, xi);
                image *= heat_kernel_image_1d(t, xi);
            }
            worst = std::max(worst, std::abs(spectral - image));
        }
    }
    return {worst <= 1e-10, "max difference " + fmt(worst) + " over 2000 (t,x), d = 1, 2"};
}

// 2. Two-sided Gaussian sandwich and the uniform bound by C_t.
Outcome sandwich_bounds()
{
    int sandwich = 0, uniform = 0;
    for (int d = 1; d <= 2; ++d) {
        RngStream rng(12, d);
        for (int i = 0; i < 10000; ++i) {
            const double t = log_uniform(rng, 1e-3, 50.0);
            const TorusPoint x(random_point(rng, d));
            if (!kernel_sandwich_check(t, x).pass) ++sandwich;
            if (!kernel_uniform_bound_check(t, x).pass) ++uniform;
        }
    }
    return {sandwich == 0 && uniform == 0, std::to_string(sandwich) + " sandwich and " + std::to_string(uniform) +
                                               " uniform-bound violations over 2 x 10^4 draws"};
}

// 3. Flattening towards the uniform density.
Outcome flattening()
{
    bool pass = true;
    std::ostringstream os;
    for (int d = 1; d <= 2; ++d) {
        const double theta = KernelConfig{}.theta(1.0, d);
        const int n = d == 1 ? 4001 : 301;
        for (double t : {2.0, 5.0, 10.0}) {
            double sup = 0.0;
            std::vector<double> x(d);
            const long total = d == 1 ? n : static_cast<long>(n) * n;
            for (long i = 0; i < total; ++i) {
                x[0] = -pi + two_pi * (i % n) / (n - 1);
                if (d == 2) x[1] = -pi + two_pi * (i / n) / (n - 1);
                sup = std::max(sup, std::abs(heat_kernel_deviation(t, x)));
            }
            const double bound = theta * std::exp(-0.5 * t);
            pass = pass && sup <= bound;
            os << "d" << d << " t" << t << " " << fmt(sup / bound) << "; ";
        }
    }
    return {pass, "sup/bound: " + os.str()};
}

// 4. Covariance by two routes, zero mean and the singularity exponent.
Outcome covariance_routes()
{
    bool pass = true;
    std::ostringstream os;
    const NoiseSpec configs[] = {make_spec(1, 0.3, 0.0), make_spec(1, 0.45, 1.0), make_spec(2, 0.5, 1.0)};
    double worst = 0.0;
    for (const auto& spec : configs) {
        RngStream rng(14, spec.d);
        for (int i = 0; i < 20; ++i) {
            std::vector<double> x = random_point(rng, spec.d);
            double r = 0.0;
            for (double v : x) r += v * v;
            if (std::sqrt(r) < 0.05) x[0] += 0.5;
            const double a = covariance_eval(spec, x).value;
            const double b = covariance_eval_integral(spec, x).value;
            worst = std::max(worst, std::abs(a - b));
        }
    }
    pass = pass && worst <= 1e-6;
    os << "route difference " << fmt(worst) << "; ";

    // The mean over the torus: f is even, so integrate over (0, pi) after
    // x = pi u^5, which turns |x|^{2 alpha - 1} into a vanishing factor.
    boost::math::quadrature::tanh_sinh<double> ts;
    double worst_mean = 0.0;
    for (double alpha : {0.3, 0.45}) {
        const auto spec = make_spec(1, alpha, 0.0);
        const double integral = ts.integrate(
            [&](double u) {
                const double x = pi * std::pow(u, 5.0);
                if (x < 1e-100) return 0.0;
                return 5.0 * pi * std::pow(u, 4.0) * covariance_eval_integral(spec, std::vector<double>{x}).value;
            },
            0.0, 1.0);
        worst_mean = std::max(worst_mean, std::abs(2.0 * integral / two_pi));
    }
    pass = pass && worst_mean <= 1e-8;
    os << "mean " << fmt(worst_mean) << "; ";

    // Fit f(r) - f(2r), which drops the additive constant and keeps the power law.
    const std::vector<double> radii{1e-4, 3e-4, 1e-3, 3e-3};
    for (const auto& spec : configs) {
        std::vector<double> lx, ly;
        for (double r : radii) {
            std::vector<double> x(spec.d, 0.0), x2(spec.d, 0.0);
            x[0] = r;
            x2[0] = 2.0 * r;
            lx.push_back(std::log(r));
            ly.push_back(std::log(covariance_eval_integral(spec, x).value - covariance_eval_integral(spec, x2).value));
        }
        const double slope = detail::ols_slope(lx, ly);
        const double expected = -spec.d + 2.0 * spec.alpha;
        pass = pass && std::abs(slope - expected) <= 0.05;
        os << "slope " << fmt(slope) << " vs " << fmt(expected) << "; ";
    }
    return {pass, os.str()};
}

// 5. Sampled increments reproduce the covariance.
Outcome noise_fidelity()
{
    const auto spec = make_spec(1, 0.3, 1.0);
    const auto cov = empirical_covariance(spec, 0.01, 33, 16, 10000, 15);
    const auto var = constant_functional_variance(spec, 0.01, 10, 33, 16, 10000, 16);
    const bool cov_pass = cov.max_deviation_se <= 4.0;
    const bool var_pass = std::abs(var.variance - var.target) <= 3.0 * var.std_err;
    return {cov_pass && var_pass, "worst covariance deviation " + fmt(cov.max_deviation_se) +
                                      " SE; constant functional " + fmt(var.variance) + " vs " + fmt(var.target) +
                                      " (" + fmt(std::abs(var.variance - var.target) / var.std_err) + " SE)"};
}

// 6. Bridge against the free kernel, and the image-sum constant.
Outcome bridge_comparison()
{
    bool pass = true;
    std::ostringstream os;
    int info_violations = 0;
    for (int d = 1; d <= 2; ++d)
        for (double eps : {0.5, 1.0}) {
            for (double factor : {2.0, 10.0}) {
                const auto r = check_large_time_bound(eps, factor * eps, d, 10000, 60 + d);
                pass = pass && r.pass();
                if (!r.pass()) os << "d" << d << " eps" << eps << " t" << factor * eps << ": " << r.violations << "; ";
            }
            info_violations += check_large_time_bound(eps, eps, d, 10000, 70 + d).violations;
        }
    os << "zero violations at t = 2 eps and 10 eps";
    os << " (at t = eps, c_eps fails " << info_violations << " of 4 x 10^4 draws; ";
    int fixed = 0;
    for (int d = 1; d <= 2; ++d)
        for (double eps : {0.5, 1.0})
            fixed += check_large_time_bound(eps, eps, d, 10000, 70 + d, {}, large_time_lower_constant(eps)).violations;
    os << "large_time_lower_constant fails " << fixed << "); ";
    for (int d = 1; d <= 2; ++d) {
        const auto a = image_sum_sweep(d, 10000, 1.0, 80 + d);
        const auto b = image_sum_sweep(d, 20000, 1.0, 90 + d);
        const double change = std::abs(b.fitted_constant / a.fitted_constant - 1.0);
        pass = pass && std::isfinite(a.fitted_constant) && change <= 0.2;
        os << "image-sum constant d" << d << " " << fmt(a.fitted_constant) << " -> " << fmt(b.fitted_constant) << "; ";
    }
    return {pass, os.str()};
}

// 7. Constant noise: solver and Feynman-Kac against the closed form.
Outcome constant_noise()
{
    const auto spec = make_spec(1, 0.3, 1.0, 1.0);
    McMomentsConfig cfg;
    cfg.solver.spec = spec;
    cfg.solver.noise_mode_k = 0;
    cfg.solver.mode_k = 4;
    cfg.solver.grid_n = 9;
    cfg.solver.dt = 1e-3;
    cfg.solver.T = 1.0;
    cfg.mu = InitialMeasure::make_uniform(1, 1.0);
    cfg.n_samples = 10000;
    cfg.t_list = {0.5, 1.0};
    cfg.x_list = {{0.0}};
    cfg.seed = 17;
    cfg.threads = threads;
    cfg.upper_bound = false;
    bool pass = true;
    std::ostringstream os;
    for (const auto& e : mc_moments(cfg)) {
        const double target = std::exp(spec.rho / two_pi * e.t) / (two_pi * two_pi);
        const double z = std::abs(e.value - target) / e.std_err;
        pass = pass && z <= 3.0;
        os << "solver t" << e.t << " " << fmt(z) << " SE; ";
        FeynmanKacOptions o;
        o.n_paths = 2000;
        o.seed = 18;
        o.threads = threads;
        const auto fk = feynman_kac_second_moment(spec, cfg.mu, e.t, {0.0}, CovarianceLookup::constant(spec), o);
        const double gap = std::abs(fk.estimate.value - target);
        pass = pass && gap <= std::max(3.0 * fk.estimate.std_err, 1e-12 * target);
        os << "Feynman-Kac t" << e.t << " rel. error " << fmt(gap / target) << "; ";
    }
    return {pass, os.str()};
}

// 8. Monte-Carlo second moments between the bounds.
Outcome moment_sandwich()
{
    bool pass = true;
    int runs = 0, partial = 0, lower_checked = 0;
    double worst_upper = 0.0, worst_lower = 0.0;
    auto run = [&](const NoiseSpec& spec, bool lower) {
        McMomentsConfig cfg;
        cfg.solver.spec = spec;
        cfg.solver.mode_k = 16;
        cfg.solver.grid_n = 33;
        cfg.solver.dt = 2e-3;
        cfg.solver.T = 1.0;
        cfg.mu = InitialMeasure::make_uniform(1, 1.0);
        cfg.n_samples = 1000;
        cfg.t_list = {0.5, 1.0};
        cfg.x_list = {{0.0}, {1.5}};
        cfg.seed = 19 + runs;
        cfg.threads = threads;
        cfg.h_cells = 1000;
        if (lower) {
            NoiseSpec zero = spec;
            zero.rho = 0.0;
            const double C_f = spec.rho / two_pi + rho_star(zero, 256).min_f;
            cfg.lower = LowerBoundInputs{0.5, C_f, 1.0 / two_pi};
        }
        for (const auto& e : mc_moments(cfg)) {
            pass = pass && e.upper_pass && e.lower_pass;
            if (!e.upper_converged) ++partial;
            worst_upper = std::max(worst_upper, (e.value - 3.0 * e.std_err) / e.upper_bound);
            if (lower && e.lower_bound > 0.0) {
                ++lower_checked;
                worst_lower = std::max(worst_lower, e.lower_bound / (e.value + 3.0 * e.std_err));
            }
        }
        ++runs;
    };
    for (double alpha : {0.3, 0.45})
        for (double rho : {0.0, 1.0})
            for (double lambda : {0.5, 1.0}) {
                const auto spec = make_spec(1, alpha, rho, lambda);
                run(spec, rho >= rho_sufficient(alpha, 1));
            }
    for (double alpha : {0.3, 0.45}) {
        const double rho = std::ceil(rho_sufficient(alpha, 1) * 100.0) / 100.0;
        run(make_spec(1, alpha, rho, 1.0), true);
    }
    return {pass, std::to_string(runs) + " configurations; largest (MC - 3 SE) / upper " + fmt(worst_upper) + " (" +
                      std::to_string(partial) + " bounds from partial sums); largest lower / (MC + 3 SE) " +
                      fmt(worst_lower) + " over " + std::to_string(lower_checked) + " estimates"};
}

// 9. Resolvent quadrature, its bound and the two-point function.
Outcome resolvent_consistency()
{
    bool pass = true;
    std::ostringstream os;
    const auto spec = make_spec(1, 0.3, 1.0, 1.0);
    std::vector<double> xs;
    for (int i = 0; i < 17; ++i) xs.push_back(-pi + two_pi * i / 17);
    const std::vector<double> times{0.5, 1.0, 2.0};

    ResolventOptions flat;
    flat.constant_f = 0.7;
    const auto c = resolvent_Ln(spec, 1, times, 0.3, -0.5, xs, flat);
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double top = *std::max_element(c.gg[k].begin(), c.gg[k].end());
        for (std::size_t i = 0; i < c.gg[k].size(); ++i) {
            if (c.gg[k][i] < c.gg_floor * top) continue;
            worst = std::max(worst, std::abs(c.values[1][k][i] / (c.gg[k][i] * 0.7 * times[k]) - 1.0));
        }
    }
    pass = pass && worst <= 0.01;
    os << "constant-f L1 rel. error " << fmt(worst) << "; ";

    ResolventOptions coarse, fine;
    coarse.modes = 32;
    fine.modes = 48;
    const auto a = resolvent_Ln(spec, 3, times, 0.3, -0.5, xs, coarse);
    const auto b = resolvent_Ln(spec, 3, times, 0.3, -0.5, xs, fine);
    const double drift = std::abs(b.fitted_C / a.fitted_C - 1.0);
    pass = pass && a.all_finite && b.all_finite && std::isfinite(a.fitted_C) && drift <= 0.1;
    os << "fitted C " << fmt(a.fitted_C) << " (32 modes) " << fmt(b.fitted_C) << " (48 modes); ";

    const auto quiet = make_spec(1, 0.3, 1.0, 1e-6);
    const auto tp = two_point(1.0, 0.2, -1.0, InitialMeasure::make_uniform(1, 1.0), quiet, 2);
    const double rel = std::abs(tp.value / tp.j0_product - 1.0);
    pass = pass && rel <= 1e-9;
    os << "two-point at lambda 1e-6 rel. gap " << fmt(rel);
    return {pass, os.str()};
}

// 10. Identities of the moment calculus.
Outcome moment_identities()
{
    bool pass = true;
    std::ostringstream os;
    double worst = 0.0;
    for (double alpha : {0.3, 0.45})
        for (double rho : {0.0, 1.0}) {
            const TemporalKernels kern(make_spec(1, alpha, rho));
            for (double gamma : {0.5, 2.0, 10.0}) {
                const long N = 2000000;
                long double s = 0.0L;
                for (long k = N; k >= 1; --k) {
                    const long double q = static_cast<long double>(k) * k;
                    s += 2.0L * std::pow(q, -static_cast<long double>(alpha)) / (q + gamma);
                }
                s += 2.0L * std::pow(N + 0.5L, -2.0L * alpha - 1.0L) / (2.0L * alpha + 1.0L);
                const double direct = static_cast<double>((rho / gamma + s) / std::sqrt(2.0L * pi));
                worst = std::max(worst, std::abs(kern.k1_laplace(gamma) - direct));
            }
        }
    pass = pass && worst <= 1e-8;
    os << "k1 Laplace error " << fmt(worst) << "; ";

    int violations = 0;
    for (double alpha : {0.3, 0.45}) {
        const auto table = hn_table(make_spec(1, alpha, 1.0), 32, uniform_time_grid(10.0, 1000), threads);
        for (const auto& row : table.values)
            for (std::size_t i = 1; i < row.size(); ++i)
                if (row[i] < row[i - 1]) ++violations;
    }
    pass = pass && violations == 0;
    os << violations << " row decreases; ";

    double residual = 0.0;
    for (double lambda : {0.5, 1.0, 5.0, 50.0}) residual = std::max(residual, gamma0(lambda, make_spec(1, 0.3, 1.0)).residual);
    pass = pass && residual < 1e-9;
    os << "gamma0 residual " << fmt(residual) << "; ";

    const auto small = make_spec(1, 0.3, 1.0, 0.15);
    const double g = gamma0(small.lambda, small).gamma0;
    for (double t : {10.0, 50.0}) {
        const double rate = std::log(H_lambda(t, small.lambda, small, 1e-12, 4000, threads)) / t;
        pass = pass && rate <= g + 0.1;
        os << "(1/t) log H at t" << t << " " << fmt(rate) << " vs " << fmt(g) << "; ";
    }

    for (double alpha : {0.3, 0.45}) {
        const auto spec = make_spec(1, alpha, 1.0);
        std::vector<double> lx, ly;
        for (double lambda : {1e2, 3e2, 1e3, 3e3, 1e4}) {
            lx.push_back(std::log(lambda));
            ly.push_back(std::log(gamma0(lambda, spec).gamma0));
        }
        const double slope = detail::ols_slope(lx, ly);
        const double expected = gamma0_rate_exponent(alpha, 1);
        pass = pass && std::abs(slope / expected - 1.0) <= 0.1;
        os << "slope " << fmt(slope) << " vs " << fmt(expected) << "; ";
    }
    return {pass, os.str()};
}

// 11. Hoelder exponents from structure functions, stable under dt halving.
// Time lags span 4e-3 to 6e-2 whatever the step, far above the step scale.
Outcome holder_bands()
{
    auto run = [](int K, int refine) {
        HolderConfig cfg;
        cfg.solver.spec = make_spec(1, 0.3, 1.0, 1.0);
        cfg.solver.mode_k = K;
        cfg.solver.grid_n = 2 * K + 1;
        cfg.solver.dt = 1.0 / (static_cast<double>(K) * K * refine);
        cfg.solver.T = 0.4;
        cfg.mu = InitialMeasure::make_uniform(1, 1.0);
        cfg.n_paths = 200;
        cfg.seed = 21;
        cfg.threads = threads;
        cfg.burn_in = 0.1;
        const int scale = (K / 64) * (K / 64) * refine;
        cfg.sample_every = 2 * scale;
        cfg.time_lags = {16 * scale, 32 * scale, 64 * scale, 128 * scale, 256 * scale};
        return holder_experiment(cfg);
    };
    auto judge = [&](int K, std::ostringstream& os) {
        const auto a = run(K, 1);
        const auto b = run(K, 2);
        const bool bands = a.beta1_hat >= 0.3 && a.beta1_hat <= 0.5 && a.beta2_hat >= 0.6 && a.beta2_hat <= 1.0;
        const double w1 = 2.0 * std::hypot(a.time.std_err, b.time.std_err);
        const double w2 = 2.0 * std::hypot(a.space.std_err, b.space.std_err);
        const bool stable = std::abs(a.beta1_hat - b.beta1_hat) <= w1 && std::abs(a.beta2_hat - b.beta2_hat) <= w2;
        os << "K" << K << ": beta1 " << fmt(a.beta1_hat) << " -> " << fmt(b.beta1_hat) << " (allowed " << fmt(w1)
           << "), beta2 " << fmt(a.beta2_hat) << " -> " << fmt(b.beta2_hat) << " (allowed " << fmt(w2) << "); ";
        return bands && stable;
    };
    std::ostringstream os;
    bool pass = judge(64, os);
    if (!pass) pass = judge(128, os);
    return {pass, os.str()};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"dual-series kernel identity", dual_series},
        {"kernel sandwich bounds", sandwich_bounds},
        {"long-time flattening", flattening},
        {"covariance routes, mean and singularity", covariance_routes},
        {"noise covariance fidelity", noise_fidelity},
        {"bridge comparison", bridge_comparison},
        {"constant-noise oracle", constant_noise},
        {"moment bound sandwich", moment_sandwich},
        {"resolvent consistency", resolvent_consistency},
        {"moment-calculus identities", moment_identities},
        {"Hoelder bands", holder_bands},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("criterion %2zu %s  %s: %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL",
                    criteria[i].first.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
