#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <tuple>

#include "torus_pam/covariance.hpp"

using namespace tpam;

namespace {

NoiseSpec make_spec(int d, double alpha, double rho)
{
    NoiseSpec s;
    s.d = d;
    s.alpha = alpha;
    s.rho = rho;
    return s;
}

// sum_{k != 0} cos(kx) / k^2 = pi^2/3 - pi|x| + x^2/2 on [-pi, pi].
double closed_form_alpha_one(double x, double rho)
{
    const double a = std::abs(x);
    return (rho + pi * pi / 3.0 - pi * a + 0.5 * a * a) / two_pi;
}

// sum_{k != 0} cos(kx) / |k| = -2 log(2 sin(|x|/2)).
double closed_form_alpha_half(double x, double rho)
{
    return (rho - 2.0 * std::log(2.0 * std::sin(0.5 * std::abs(x)))) / two_pi;
}

}  // namespace

TEST(Covariance, ClosedFormsInOneDimension)
{
    for (double x : {-3.0, -1.2, -0.01, 1e-4, 0.5, 2.2, 3.1}) {
        const auto one = make_spec(1, 1.0, 0.7);
        const auto half = make_spec(1, 0.5, 0.0);
        EXPECT_NEAR(covariance_eval(one, std::vector<double>{x}).value, closed_form_alpha_one(x, 0.7), 1e-10) << x;
        EXPECT_NEAR(covariance_eval(half, std::vector<double>{x}).value, closed_form_alpha_half(x, 0.0), 1e-9) << x;
        EXPECT_NEAR(covariance_eval_integral(one, std::vector<double>{x}).value, closed_form_alpha_one(x, 0.7), 1e-8) << x;
        EXPECT_NEAR(covariance_eval_integral(half, std::vector<double>{x}).value, closed_form_alpha_half(x, 0.0), 1e-8)
            << x;
    }
}

TEST(Covariance, RoutesAgreeAtRandomPoints)
{
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(-pi, pi);
    for (auto [d, alpha, rho] : {std::tuple{1, 0.3, 0.0}, std::tuple{1, 0.45, 1.0}, std::tuple{2, 0.5, 1.0}}) {
        const auto spec = make_spec(d, alpha, rho);
        for (int i = 0; i < 8; ++i) {
            std::vector<double> x(d);
            for (double& v : x) v = u(gen);
            const auto a = covariance_eval(spec, x);
            const auto b = covariance_eval_integral(spec, x);
            EXPECT_NEAR(a.value, b.value, 1e-6) << d << " " << alpha;
            EXPECT_LE(std::abs(a.value - b.value), a.error_bound + b.error_bound + 1e-12);
        }
    }
}

TEST(Covariance, ConvergesToTruncatedSeriesForSmoothWeights)
{
    const auto spec = make_spec(2, 1.5, 0.2);
    const std::vector<double> x{0.9, -2.1};
    EXPECT_NEAR(covariance_eval(spec, x).value, covariance_truncated(spec, x, 600), 1e-5);
}

TEST(Covariance, MeanOfTheNonConstantPartVanishes)
{
    const auto spec = make_spec(1, 0.45, 0.0);
    // Midpoint rule on a grid that avoids the singular origin; the error of the
    // integrable singularity is bounded by the cell nearest zero.
    const int n = 4096;
    const double h = two_pi / n;
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += covariance_eval(spec, std::vector<double>{-pi + (j + 0.5) * h}).value * h;
    EXPECT_NEAR(s, 0.0, 5e-3);
    // The rho part integrates to rho.
    EXPECT_NEAR(covariance_eval(make_spec(1, 0.45, 2.0), std::vector<double>{1.0}).value -
                    covariance_eval(spec, std::vector<double>{1.0}).value,
                2.0 / two_pi, 1e-12);
}

TEST(Covariance, SingularityExponent)
{
    // f(r) - f(2r) drops the additive constant and keeps the power law.
    for (auto [d, alpha, rho] : {std::tuple{1, 0.3, 0.0}, std::tuple{1, 0.45, 1.0}, std::tuple{2, 0.5, 1.0}}) {
        const auto spec = make_spec(d, alpha, rho);
        std::vector<double> lx, ly;
        for (double r : {1e-4, 3e-4, 1e-3, 3e-3}) {
            std::vector<double> x(d, 0.0), x2(d, 0.0);
            x[0] = r;
            x2[0] = 2.0 * r;
            lx.push_back(std::log(r));
            ly.push_back(std::log(covariance_eval_integral(spec, x).value - covariance_eval_integral(spec, x2).value));
        }
        const double slope = (ly.back() - ly.front()) / (lx.back() - lx.front());
        EXPECT_NEAR(slope, -d + 2.0 * alpha, 0.01);
    }
}

TEST(Covariance, SymmetricUnderReflection)
{
    const auto spec = make_spec(2, 0.5, 1.0);
    const double a = covariance_eval(spec, std::vector<double>{0.4, 1.3}).value;
    EXPECT_NEAR(a, covariance_eval(spec, std::vector<double>{-0.4, 1.3}).value, 1e-9);
    EXPECT_NEAR(a, covariance_eval(spec, std::vector<double>{1.3, 0.4}).value, 1e-9);
}

TEST(Covariance, OriginIsSingular)
{
    EXPECT_THROW(covariance_eval(make_spec(1, 0.3, 0.0), std::vector<double>{0.0}), SingularityError);
    EXPECT_THROW(covariance_eval_integral(make_spec(2, 0.5, 0.0), std::vector<double>{0.0, 0.0}), SingularityError);
}

TEST(Covariance, SpectralRouteRefusesHopelessPoints)
{
    EXPECT_THROW(covariance_eval(make_spec(2, 0.5, 0.0), std::vector<double>{1e-4, 0.0}), NumericError);
}

TEST(Covariance, RegularAtOriginWhenAlphaExceedsHalfDimension)
{
    const auto spec = make_spec(1, 1.0, 0.0);
    EXPECT_NEAR(covariance_eval(spec, std::vector<double>{0.0}).value, closed_form_alpha_one(0.0, 0.0), 1e-5);
    EXPECT_NEAR(covariance_eval_integral(spec, std::vector<double>{0.0}).value, closed_form_alpha_one(0.0, 0.0), 1e-8);
}

TEST(Weights, ValuesAndTruncation)
{
    const auto spec = make_spec(2, 0.5, 3.0);
    const auto w = make_weights(spec, 4);
    EXPECT_DOUBLE_EQ(w.weight({0, 0}), 3.0 / two_pi);
    EXPECT_NEAR(w.weight({3, -4}), 0.2 / two_pi, 1e-15);
    EXPECT_EQ(w.weight({5, 0}), 0.0);
    const auto kept = make_weights(spec, 4, 0);
    EXPECT_DOUBLE_EQ(kept.weight({0, 0}), 3.0 / two_pi);
    EXPECT_EQ(kept.weight({1, 0}), 0.0);
}

TEST(Dalang, Condition)
{
    EXPECT_TRUE(make_spec(1, 0.01, 0.0).dalang());
    EXPECT_TRUE(make_spec(3, 0.6, 0.0).dalang());
    EXPECT_FALSE(make_spec(3, 0.5, 0.0).dalang());
    EXPECT_THROW(require_dalang(make_spec(3, 0.2, 0.0)), DomainError);
}

TEST(RhoStar, MinimumIsAtTheAntipode)
{
    const auto r = rho_star(make_spec(1, 0.5, 0.0), 64);
    ASSERT_EQ(r.argmin.size(), 1u);
    EXPECT_NEAR(std::abs(r.argmin[0]), pi, 1e-12);
    // alpha = 1/2 closed form at x = pi: -2 log 2 / (2 pi).
    EXPECT_NEAR(r.rho_star_est, 2.0 * std::log(2.0), 1e-8);
    EXPECT_GT(r.rho_sufficient, r.rho_star_est);
}

TEST(InnerProduct, MatchesWeightedCoefficients)
{
    const auto spec = make_spec(1, 0.5, 2.0);
    TrigPolynomial phi{1, {{{0}, {1.0, 0.0}}, {{2}, {0.5, 0.0}}}};
    TrigPolynomial psi{1, {{{0}, {3.0, 0.0}}, {{2}, {1.0, 0.0}}, {{1}, {9.0, 0.0}}}};
    // a_k = sqrt(2pi) c_k.
    const double expected = two_pi * (2.0 * 3.0 + 0.5 * 1.0 / 2.0);
    EXPECT_NEAR(noise_inner_product(spec, phi, psi), expected, 1e-12);
}
