#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "torus_pam/heat_kernel.hpp"

using namespace tpam;

namespace {

// Direct image sum in long double, no tail control beyond a fixed window.
double image_sum(double t, double x)
{
    long double s = 0.0L;
    for (int n = -60; n <= 60; ++n) {
        const long double y = x + 2.0L * n * pi;
        s += std::exp(-y * y / (2.0L * t));
    }
    return static_cast<double>(s / std::sqrt(2.0L * pi * t));
}

// Direct Fourier sum (1/2pi) sum_k e^{-k^2 t/2} cos(kx).
double fourier_sum(double t, double x)
{
    long double s = 1.0L;
    for (int k = 1; k <= 4000; ++k) s += 2.0L * std::exp(-0.5L * k * k * t) * std::cos(static_cast<long double>(k) * x);
    return static_cast<double>(s / (2.0L * pi));
}

}  // namespace

TEST(HeatKernel, MatchesIndependentSeries)
{
    for (double t : {0.01, 0.3, 1.0, 4.0, 12.0})
        for (double x : {-3.1, -1.0, 0.0, 0.4, 2.9}) {
            const double g = heat_kernel(t, std::vector<double>{x});
            EXPECT_NEAR(g, image_sum(t, x), 1e-12 * std::max(1.0, g)) << t << " " << x;
            if (t >= 0.05) {
                EXPECT_NEAR(g, fourier_sum(t, x), 1e-12) << t << " " << x;
            }
        }
}

TEST(HeatKernel, DualSeriesAgree)
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ut(0.02, 20.0), ux(-pi, pi);
    for (int i = 0; i < 500; ++i) {
        const double t = ut(gen), x = ux(gen);
        EXPECT_NEAR(heat_kernel_spectral_1d(t, x), heat_kernel_image_1d(t, x), 1e-12);
    }
}

TEST(HeatKernel, ProductStructureInHigherDimension)
{
    const std::vector<double> x{0.3, -2.0, 1.1};
    const double prod = heat_kernel_1d(0.7, 0.3) * heat_kernel_1d(0.7, -2.0) * heat_kernel_1d(0.7, 1.1);
    EXPECT_NEAR(heat_kernel(0.7, x), prod, 1e-15);
    EXPECT_NEAR(log_heat_kernel(0.7, x), std::log(prod), 1e-12);
}

TEST(HeatKernel, UnitMassAndSemigroup)
{
    const int n = 512;
    const double h = two_pi / n;
    double mass = 0.0, conv = 0.0;
    for (int j = 0; j < n; ++j) {
        const double y = -pi + j * h;
        mass += heat_kernel_1d(0.2, y) * h;
        conv += heat_kernel_1d(0.2, 1.0 - y) * heat_kernel_1d(0.5, y) * h;
    }
    EXPECT_NEAR(mass, 1.0, 1e-13);
    EXPECT_NEAR(conv, heat_kernel_1d(0.7, 1.0), 1e-13);
}

TEST(HeatKernel, TinyTimesStayPositiveInLogSpace)
{
    const double lg = log_heat_kernel(1e-4, std::vector<double>{3.0});
    EXPECT_TRUE(std::isfinite(lg));
    EXPECT_NEAR(lg, -9.0 / 2e-4 - 0.5 * std::log(two_pi * 1e-4), 1e-6);
}

TEST(HeatKernel, RejectsNonPositiveTime)
{
    EXPECT_THROW(heat_kernel(0.0, std::vector<double>{0.0}), DomainError);
    EXPECT_THROW(heat_kernel(-1.0, std::vector<double>{0.0}), DomainError);
}

TEST(KernelBounds, SandwichAndUniformBoundHoldOnRandomPoints)
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ux(-pi, pi);
    std::uniform_real_distribution<double> ulogt(std::log(1e-3), std::log(50.0));
    for (int i = 0; i < 4000; ++i) {
        const int d = 1 + i % 2;
        std::vector<double> x(d);
        for (double& v : x) v = ux(gen);
        const double t = std::exp(ulogt(gen));
        EXPECT_TRUE(kernel_sandwich_check(t, TorusPoint(x)).pass) << t;
        EXPECT_TRUE(kernel_uniform_bound_check(t, TorusPoint(x)).pass) << t;
    }
}

TEST(KernelBounds, ConstantCtLimits)
{
    EXPECT_NEAR(theta_c(1e-3), 1.0, 1e-12);
    // C_t = sum_n exp(-2 pi^2 n^2 / t) over n in Z, against a direct sum.
    for (double t : {1.0, 5.0, 30.0}) {
        double s = 1.0;
        for (int n = 1; n < 2000; ++n) s += 2.0 * std::exp(-2.0 * pi * pi * n * n / t);
        EXPECT_NEAR(theta_c(t), s, 1e-12 * s);
    }
}

TEST(KernelBounds, LongTimeFlattening)
{
    const KernelConfig cfg;
    for (int d : {1, 2}) {
        const double theta = cfg.theta(1.0, d);
        for (double t : {2.0, 5.0, 10.0}) {
            double sup = 0.0;
            for (int i = 0; i < 64; ++i) {
                std::vector<double> x(d, -pi + two_pi * i / 64.0);
                sup = std::max(sup, std::abs(heat_kernel_deviation(t, x)));
            }
            EXPECT_LE(sup, theta * std::exp(-0.5 * t));
        }
    }
}

TEST(KernelBounds, DeviationIsAccurateForLongTimes)
{
    // The flattened part is exp(-t/2) cos(x)/pi to leading order.
    const double t = 40.0, x = 0.5;
    const double dev = heat_kernel_deviation(t, std::vector<double>{x});
    EXPECT_NEAR(dev / (std::exp(-0.5 * t) * std::cos(x) / pi), 1.0, 1e-6);
}

TEST(KernelBounds, IncrementConstantsAreModerate)
{
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> ux(-pi, pi), ut(0.05, 3.0);
    double worst_time = 0.0, worst_space = 0.0;
    for (int i = 0; i < 500; ++i) {
        const double t = ut(gen), tp = t + ut(gen);
        const auto r = kernel_increment_bounds(t, tp, TorusPoint{ux(gen)}, TorusPoint{ux(gen)}, 0.5);
        worst_time = std::max(worst_time, r.c_time);
        worst_space = std::max(worst_space, r.c_space);
    }
    EXPECT_LT(worst_time, 10.0);
    EXPECT_LT(worst_space, 10.0);
    EXPECT_THROW(kernel_increment_bounds(1.0, 2.0, TorusPoint{0.0}, TorusPoint{1.0}, 1.5), DomainError);
}
