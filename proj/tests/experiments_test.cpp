#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "torus_pam.hpp"

using namespace tpam;

namespace {

NoiseSpec make_spec(double alpha, double rho, double lambda)
{
    NoiseSpec s;
    s.d = 1;
    s.alpha = alpha;
    s.rho = rho;
    s.lambda = lambda;
    return s;
}

}  // namespace

TEST(Stats, MeanEstimateAndJackknife)
{
    const std::vector<double> v{1.0, 2.0, 4.0, 7.0};
    const auto m = mean_estimate(v);
    EXPECT_DOUBLE_EQ(m.mean, 3.5);
    EXPECT_NEAR(m.std_err, std::sqrt(7.0 / 4.0), 1e-15);   // s^2 = 7
    // Delete-one jackknife of the mean reproduces s / sqrt(n).
    const auto jk = jackknife(4, [&](long skip) {
        double s = 0.0;
        int n = 0;
        for (int i = 0; i < 4; ++i)
            if (i != skip) s += v[i], ++n;
        return s / n;
    });
    EXPECT_NEAR(jk.std_err, m.std_err, 1e-14);
    EXPECT_THROW(mean_estimate({1.0}), DomainError);
}

TEST(ExpectedOccupation, DirectModeSum)
{
    const auto spec = make_spec(0.3, 2.0, 1.0);
    for (double t : {0.5, 7.0}) {
        long double s = 0.0L;
        for (long k = 2000000; k >= 1; --k) {
            const long double q = static_cast<long double>(k) * k;
            s += 2.0L * std::pow(q, -1.3L) * -std::expm1(-q * t);
        }
        s += 2.0L * std::pow(2000000.5L, -1.6L) / 1.6L;
        const double direct = static_cast<double>((2.0L * t + s) / (2.0L * pi));
        EXPECT_NEAR(expected_occupation(spec, t), direct, 1e-9 * direct) << t;
    }
}

TEST(CovarianceLookup, TablesReproduceTheCovariance)
{
    const auto spec = make_spec(0.3, 1.0, 1.0);
    const auto c = CovarianceLookup::constant(spec);
    const double y = 0.8;
    EXPECT_DOUBLE_EQ(c(&y), 1.0 / two_pi);
    const auto capped = CovarianceLookup::capped(spec, 1e-2);
    for (double r : {0.011, 0.3, 1.7, 3.1, -2.4}) {
        const double expected = covariance_eval(spec, std::vector<double>{r}).value;
        EXPECT_NEAR(capped(&r), expected, 1e-5 * std::abs(expected)) << r;
    }
    const double inside = 0.004, edge = 1e-2;
    EXPECT_NEAR(capped(&inside), capped(&edge), 1e-12);
    const auto trunc = CovarianceLookup::truncated(spec, 8, 1024);
    for (double r : {0.0, 0.37, 2.0}) EXPECT_NEAR(trunc(&r), covariance_truncated(spec, {r}, 8), 1e-4) << r;
}

TEST(FeynmanKac, ConstantNoiseIsExact)
{
    const auto spec = make_spec(0.3, 1.5, 1.2);
    FeynmanKacOptions o;
    o.n_paths = 200;
    const auto r = feynman_kac_second_moment(spec, InitialMeasure::make_uniform(1, 1.0), 0.7, {0.0},
                                             CovarianceLookup::constant(spec), o);
    const double expected = std::exp(1.44 * 1.5 / two_pi * 0.7) / (two_pi * two_pi);
    EXPECT_NEAR(r.estimate.value, expected, 1e-13);
    EXPECT_LT(r.estimate.std_err, 1e-15);
}

TEST(FeynmanKac, RespectsTheJensenFloor)
{
    const auto spec = make_spec(0.3, 1.0, 1.0);
    FeynmanKacOptions o;
    o.n_paths = 3000;
    const auto r = feynman_kac_second_moment(spec, InitialMeasure::make_uniform(1, 1.0), 0.5, {0.0},
                                             CovarianceLookup::capped(spec, 1e-3), o);
    EXPECT_TRUE(r.jensen_pass) << r.estimate.value << " floor " << r.jensen_floor;
    EXPECT_GT(r.estimate.value, 1.0 / (two_pi * two_pi));
}

TEST(FeynmanKac, RejectsPointMasses)
{
    const auto spec = make_spec(0.3, 1.0, 1.0);
    EXPECT_THROW(feynman_kac_second_moment(spec, InitialMeasure::make_delta({0.0}), 0.5, {0.0},
                                           CovarianceLookup::constant(spec), {}),
                 DomainError);
}

TEST(Ergodic, ConstantCovarianceIsItsOwnAverage)
{
    const auto spec = make_spec(0.3, 2.0, 1.0);
    const auto rep = ergodic_average_check(spec, {1.0, 4.0}, 20, CovarianceLookup::constant(spec), 0.01, 5);
    ASSERT_EQ(rep.rows.size(), 2u);
    for (const auto& row : rep.rows) EXPECT_NEAR(row.mean, 2.0 / two_pi, 1e-13);
    EXPECT_NEAR(rep.limit, 2.0 / two_pi, 1e-15);
}

TEST(Ergodic, AveragesApproachTheZeroModeWeight)
{
    const auto spec = make_spec(0.3, 2.0, 1.0);
    const auto rep =
        ergodic_average_check(spec, {5.0, 40.0}, 200, CovarianceLookup::capped(spec, 1e-3), 0.01, 6);
    EXPECT_TRUE(rep.expected_pass);
    EXPECT_TRUE(rep.limit_pass);
    EXPECT_TRUE(rep.variance_decreasing);
}

TEST(Resolvent, ConstantCovarianceFirstOrder)
{
    const auto spec = make_spec(0.3, 1.0, 1.0);
    ResolventOptions opt;
    opt.constant_f = 0.7;
    std::vector<double> xs;
    for (int i = 0; i < 8; ++i) xs.push_back(-pi + two_pi * i / 8);
    const auto tab = resolvent_Ln(spec, 1, {0.5, 1.0}, 0.3, -0.5, xs, opt);
    EXPECT_LT(tab.max_L0_error, 1e-12);
    for (std::size_t k = 0; k < tab.times.size(); ++k) {
        const double top = *std::max_element(tab.gg[k].begin(), tab.gg[k].end());
        for (std::size_t i = 0; i < tab.gg[k].size(); ++i) {
            if (tab.gg[k][i] < 1e-3 * top) continue;
            const double expected = tab.gg[k][i] * 0.7 * tab.times[k];
            EXPECT_NEAR(tab.values[1][k][i] / expected, 1.0, 1e-3);
        }
    }
}

TEST(Resolvent, BoundConstantIsConsistentAcrossOrders)
{
    const auto spec = make_spec(0.3, 1.0, 1.0);
    std::vector<double> xs;
    for (int i = 0; i < 8; ++i) xs.push_back(-pi + two_pi * i / 8);
    const auto tab = resolvent_Ln(spec, 2, {0.5, 1.0}, 0.3, -0.5, xs);
    ASSERT_EQ(tab.fitted_C_per_n.size(), 2u);
    EXPECT_TRUE(tab.all_finite);
    EXPECT_GT(tab.fitted_C, 0.0);
    EXPECT_LT(tab.fitted_C, 1.0);
    EXPECT_GE(tab.rho_used, spec.rho);
    EXPECT_THROW(resolvent_Ln(spec, 4, {1.0}, 0.0, 0.0, xs), DomainError);
}

TEST(TwoPoint, WithoutNoiseItIsTheProductOfMeans)
{
    const auto spec = make_spec(0.3, 1.0, 0.0);
    std::vector<double> v(64);
    for (int j = 0; j < 64; ++j) v[j] = (1.0 + 0.6 * std::cos(-pi + two_pi * j / 64)) / two_pi;
    const auto mu = InitialMeasure::make_density(1, 64, v);
    const auto r = two_point(0.8, 0.2, -1.0, mu, spec, 2);
    EXPECT_NEAR(r.value, r.j0_product, 1e-12 * r.j0_product);
    EXPECT_NEAR(r.j0_product, j0(0.8, {0.2}, mu) * j0(0.8, {-1.0}, mu), 1e-14);
    EXPECT_FALSE(r.warning);
}

TEST(TwoPoint, SmallNoiseCorrectionIsPositiveAndSmall)
{
    const auto r = two_point(1.0, 0.0, 0.5, InitialMeasure::make_uniform(1, 1.0), make_spec(0.3, 1.0, 0.2), 2);
    EXPECT_GT(r.value, r.j0_product);
    EXPECT_LT(r.truncation_ratio, 1e-3);
}

TEST(TwoPoint, AgreesWithSolverMonteCarlo)
{
    const auto spec = make_spec(0.3, 1.0, 0.7);
    SolverConfig cfg;
    cfg.spec = spec;
    cfg.mode_k = 16;
    cfg.grid_n = 33;
    cfg.dt = 1.0 / 1024;
    cfg.T = 1.0;
    const auto mu = InitialMeasure::make_uniform(1, 1.0);
    const PamSolver solver(cfg, mu);
    std::vector<double> products(2000);
    for (std::size_t p = 0; p < products.size(); ++p) {
        RngStream rng(3, p);
        auto u = solver.initial_coefficients();
        for (long n = 0; n < solver.steps(); ++n) solver.step(u, rng);
        products[p] = solver.evaluate(u, {0.0}) * solver.evaluate(u, {0.5});
    }
    const auto mc = mean_estimate(products);
    const auto series = two_point(1.0, 0.0, 0.5, mu, spec, 3);
    EXPECT_NEAR(mc.mean, series.value, 3.5 * mc.std_err);
    // The noise correction is resolved: the product of means lies far outside.
    EXPECT_GT(series.value - series.j0_product, 5.0 * mc.std_err);
}

TEST(Holder, SyntheticFieldWithKnownExponents)
{
    // u(t, x) = B(t) + R(x): B a Brownian motion in time, R a periodic random
    // walk bridge in space.  Both exponents are 1/2.
    std::vector<Trajectory> ensemble;
    const int n = 256, frames = 200;
    for (int path = 0; path < 30; ++path) {
        std::mt19937_64 gen(100 + path);
        std::normal_distribution<double> g;
        Trajectory tr;
        tr.config.grid_n = n;
        tr.config.spec.d = 1;
        std::vector<double> walk(n + 1, 0.0);
        for (int j = 1; j <= n; ++j) walk[j] = walk[j - 1] + g(gen);
        std::vector<double> bridge(n);
        for (int j = 0; j < n; ++j) bridge[j] = walk[j] - walk[n] * j / n;
        double b = 0.0;
        for (int f = 0; f < frames; ++f) {
            b += g(gen);
            tr.times.push_back(f * 0.01);
            std::vector<double> field(n);
            for (int j = 0; j < n; ++j) field[j] = b + bridge[j];
            tr.fields.push_back(field);
        }
        ensemble.push_back(tr);
    }
    const auto h = empirical_holder(ensemble, {1, 2, 4, 8}, {1, 2, 4, 8});
    EXPECT_NEAR(h.beta1_hat, 0.5, 0.03);
    EXPECT_NEAR(h.beta2_hat, 0.5, 0.03);
    EXPECT_LT(h.time.ci_low, h.beta1_hat);
    EXPECT_THROW(empirical_holder(ensemble, {1, 2, 4}, {1, 2, 4, 8}), DomainError);
}

TEST(Holder, SolverExponentsNearTheirSuprema)
{
    HolderConfig cfg;
    cfg.solver.spec = make_spec(0.3, 1.0, 1.0);
    cfg.solver.mode_k = 32;
    cfg.solver.grid_n = 65;
    cfg.solver.dt = 1.0 / (32.0 * 32.0);
    cfg.solver.T = 0.3;
    cfg.mu = InitialMeasure::make_uniform(1, 1.0);
    cfg.n_paths = 20;
    cfg.burn_in = 0.1;
    cfg.time_lags = {4, 8, 16, 32, 64};
    const auto h = holder_experiment(cfg);
    EXPECT_GT(h.beta1_hat, 0.3);
    EXPECT_LT(h.beta1_hat, 0.5);
    EXPECT_GT(h.beta2_hat, 0.5);
    EXPECT_LT(h.beta2_hat, 1.0);
}

TEST(McMoments, ConstantNoiseReference)
{
    McMomentsConfig cfg;
    cfg.solver.spec = make_spec(0.3, 1.0, 1.0);
    cfg.solver.noise_mode_k = 0;
    cfg.solver.mode_k = 4;
    cfg.solver.grid_n = 9;
    cfg.solver.dt = 1e-3;
    cfg.solver.T = 1.0;
    cfg.mu = InitialMeasure::make_uniform(1, 1.0);
    cfg.n_samples = 2000;
    cfg.t_list = {0.5, 1.0};
    cfg.x_list = {{0.0}};
    cfg.h_cells = 400;
    const auto est = mc_moments(cfg);
    ASSERT_EQ(est.size(), 2u);
    for (const auto& e : est) {
        EXPECT_NEAR(e.reference, constant_noise_moment(1.0 / two_pi, e.t, 2.0, cfg.solver.spec), 1e-15);
        EXPECT_NEAR(e.value, e.reference, 3.5 * e.std_err);
        EXPECT_TRUE(e.upper_pass);
    }
}

TEST(McMoments, OddMomentUsesAbsoluteValues)
{
    McMomentsConfig cfg;
    cfg.solver.spec = make_spec(0.3, 1.0, 1.0);
    cfg.solver.mode_k = 8;
    cfg.solver.grid_n = 17;
    cfg.solver.dt = 5e-3;
    cfg.solver.T = 0.2;
    cfg.mu = InitialMeasure::make_uniform(1, 1.0);
    cfg.n_samples = 50;
    cfg.p = 3.0;
    cfg.t_list = {0.2};
    cfg.x_list = {{0.0}};
    cfg.h_cells = 200;
    const auto est = mc_moments(cfg);
    EXPECT_GT(est[0].value, 0.0);
    EXPECT_TRUE(std::isnan(est[0].reference));
}
