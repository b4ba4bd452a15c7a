#include <gtest/gtest.h>

#include <cmath>

#include "torus_pam/noise_field.hpp"

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

// dt f_K(0) summed directly over the cube |k|_inf <= K.
double pointwise_variance(const NoiseSpec& spec, int K, double dt)
{
    double s = 0.0;
    if (spec.d == 1) {
        for (int k = -K; k <= K; ++k) s += k == 0 ? spec.rho : std::pow(std::abs(k), -2.0 * spec.alpha);
    } else {
        for (int a = -K; a <= K; ++a)
            for (int b = -K; b <= K; ++b)
                s += (a == 0 && b == 0) ? spec.rho : std::pow(double(a * a + b * b), -spec.alpha);
    }
    return dt * s * std::pow(two_pi, -spec.d);
}

}  // namespace

TEST(NoiseSampler, SameStreamSameIncrement)
{
    const auto spec = make_spec(1, 0.3, 1.0);
    const NoiseSampler sampler(spec, make_weights(spec, 8), 0.01, 17);
    RngStream a(5, 3), b(5, 3), c(5, 4);
    const auto x = sampler.sample(a), y = sampler.sample(b), z = sampler.sample(c);
    EXPECT_EQ(x.values, y.values);
    EXPECT_NE(x.values, z.values);
    EXPECT_EQ(x.seed_state, "5:3:0");
    EXPECT_LT(x.imag_residue, 1e-14);
}

TEST(NoiseSampler, RejectsUnderResolvedGrid)
{
    const auto spec = make_spec(1, 0.3, 1.0);
    EXPECT_THROW(NoiseSampler(spec, make_weights(spec, 8), 0.01, 16), AliasingError);
    EXPECT_THROW(NoiseSampler(spec, make_weights(spec, 8), 0.0, 17), DomainError);
}

TEST(NoiseSampler, PointwiseVarianceInTwoDimensions)
{
    const auto spec = make_spec(2, 0.5, 2.0);
    const int K = 6, n = 13, samples = 4000;
    const double dt = 0.02;
    const NoiseSampler sampler(spec, make_weights(spec, K), dt, n);
    double sum2 = 0.0;
    for (int s = 0; s < samples; ++s) {
        RngStream rng(17, s);
        const auto inc = sampler.sample(rng);
        sum2 += inc.values[37] * inc.values[37];
    }
    const double target = pointwise_variance(spec, K, dt);
    const double var = sum2 / samples;
    EXPECT_NEAR(var, target, 4.0 * target * std::sqrt(2.0 / samples));
}

TEST(NoiseSampler, CosineFunctionalVariance)
{
    // Var <dW, cos> = dt <cos, cos>_{alpha,rho} = dt pi for every alpha.
    const auto spec = make_spec(1, 0.45, 0.0);
    const double dt = 0.05;
    const int n = 33, samples = 6000;
    const NoiseSampler sampler(spec, make_weights(spec, 16), dt, n);
    const auto x = grid_coordinate(n);
    std::vector<double> phi(n);
    for (int j = 0; j < n; ++j) phi[j] = std::cos(x[j]);
    double sum2 = 0.0;
    for (int s = 0; s < samples; ++s) {
        RngStream rng(2, s);
        const double v = wiener_functional({sampler.sample(rng)}, phi);
        sum2 += v * v;
    }
    const double target = dt * pi;
    EXPECT_NEAR(sum2 / samples, target, 4.0 * target * std::sqrt(2.0 / samples));
}

TEST(EmpiricalCovariance, MatchesTruncatedTarget)
{
    const auto r = empirical_covariance(make_spec(1, 0.3, 1.0), 0.01, 33, 16, 4000, 99);
    EXPECT_EQ(r.estimate.size(), 33u * 33u);
    EXPECT_LT(r.max_deviation_se, 4.5);
    EXPECT_LT(r.max_imag_residue, 1e-14);
    EXPECT_NEAR(r.target[0], pointwise_variance(make_spec(1, 0.3, 1.0), 16, 0.01), 1e-14);
}

TEST(ConstantFunctional, VarianceIsRhoTimesVolume)
{
    const auto v = constant_functional_variance(make_spec(1, 0.3, 0.5), 0.01, 10, 17, 8, 3000, 4);
    EXPECT_NEAR(v.t, 0.1, 1e-15);
    EXPECT_NEAR(v.target, 0.1 * 0.5 * two_pi, 1e-14);
    EXPECT_NEAR(v.variance, v.target, 3.0 * v.std_err);
}

TEST(ConstantFunctional, VanishesWithoutZeroMode)
{
    const auto v = constant_functional_variance(make_spec(1, 0.3, 0.0), 0.01, 3, 17, 8, 50, 4);
    EXPECT_LT(v.variance, 1e-26);
}

TEST(WienerFunctional, RejectsMismatchedIncrements)
{
    const auto spec = make_spec(1, 0.3, 1.0);
    RngStream rng(1);
    const auto a = sample_increment(spec, make_weights(spec, 4), 0.01, 9, rng);
    const auto b = sample_increment(spec, make_weights(spec, 4), 0.02, 9, rng);
    EXPECT_THROW(wiener_functional({a, b}, std::vector<double>(9, 1.0)), DomainError);
    EXPECT_THROW(wiener_functional({a}, std::vector<double>(8, 1.0)), DomainError);
}
