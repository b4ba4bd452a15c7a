// Colored noise on the circle: the covariance by both routes, one sampled
// increment and its empirical covariance against the target.

#include <cstdio>
#include <vector>

#include "torus_pam.hpp"

int main()
{
    using namespace tpam;
    NoiseSpec spec;
    spec.alpha = 0.3;
    spec.rho = 1.0;

    std::printf("%8s %16s %16s\n", "x", "spectral", "integral");
    for (double x : {0.01, 0.1, 0.5, 1.5, 3.0})
        std::printf("%8.3g %16.10g %16.10g\n", x, covariance_eval(spec, {x}).value,
                    covariance_eval_integral(spec, {x}).value);

    const auto rs = rho_star(NoiseSpec{1, 0.3, 0.0, 1.0}, 256);
    std::printf("\nmin of the rho = 0 covariance %.5f at %.3f; nonnegative from rho ~ %.4f\n", rs.min_f, rs.argmin[0],
                rs.rho_star_est);

    const NoiseSampler sampler(spec, make_weights(spec, 16), 0.01, 33);
    RngStream rng(7, 0);
    const auto inc = sampler.sample(rng);
    std::printf("\none increment on 33 points (dt = 0.01):\n");
    for (std::size_t i = 0; i < inc.values.size(); i += 4) std::printf("  x = %6.3f  dW = % .5f\n",
                                                                       -pi + two_pi * i / 33.0, inc.values[i]);

    const auto check = empirical_covariance(spec, 0.01, 33, 16, 5000, 8);
    std::printf("\nempirical covariance from 5000 increments: worst deviation %.2f standard errors\n",
                check.max_deviation_se);
}
