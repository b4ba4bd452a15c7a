// Heat kernel on the circle: the two series, the Gaussian sandwich and the
// approach to the uniform density.

#include <cmath>
#include <cstdio>
#include <vector>

#include "torus_pam.hpp"

int main()
{
    using namespace tpam;
    std::printf("%8s %8s %16s %16s %12s\n", "t", "x", "spectral", "image", "difference");
    for (double t : {0.05, 0.1, 1.0, 5.0})
        for (double x : {0.0, 1.0, 3.0}) {
            const double a = heat_kernel_spectral_1d(t, x);
            const double b = heat_kernel_image_1d(t, x);
            std::printf("%8.3g %8.3g %16.10g %16.10g %12.3g\n", t, x, a, b, std::abs(a - b));
        }

    std::printf("\nGaussian sandwich at x = 2.5\n");
    for (double t : {0.01, 0.5, 2.0}) {
        const auto r = kernel_sandwich_check(t, TorusPoint(std::vector<double>{2.5}));
        std::printf("  t = %5.2f: %s\n", t, r.pass ? "holds" : "violated");
    }

    std::printf("\nsup |G(t,.) - 1/(2 pi)| against Theta e^{-t/2}\n");
    const double theta = KernelConfig{}.theta(1.0, 1);
    for (double t : {1.0, 2.0, 5.0, 10.0}) {
        double sup = 0.0;
        for (int i = 0; i <= 2000; ++i)
            sup = std::max(sup, std::abs(heat_kernel_deviation(t, {-pi + two_pi * i / 2000.0})));
        std::printf("  t = %5.1f: %.3e <= %.3e\n", t, sup, theta * std::exp(-0.5 * t));
    }
}
