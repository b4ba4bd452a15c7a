// Moment calculus: the h_n table, H_lambda, the exponent gamma_0 and a
// Monte-Carlo second moment set against the upper bound.

#include <cmath>
#include <cstdio>

#include "torus_pam.hpp"

int main()
{
    using namespace tpam;
    NoiseSpec spec;
    spec.alpha = 0.3;
    spec.rho = 1.0;
    spec.lambda = 0.5;

    const auto table = hn_table(spec, 6, uniform_time_grid(2.0, 400));
    std::printf("%6s", "t");
    for (int n = 0; n <= 6; ++n) std::printf("%12s%d", "h", n);
    std::printf("\n");
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
        std::printf("%6.2f", t);
        for (int n = 0; n <= 6; ++n) std::printf("%13.5g", table.value(n, t));
        std::printf("\n");
    }

    const auto wide = hn_table(spec, h_lambda_cap, uniform_time_grid(1.0, 1000));
    std::printf("\n%8s %14s %14s\n", "lambda", "gamma0", "H_lambda(1)");
    for (double lambda : {0.25, 0.5, 1.0, 2.0}) {
        const auto h = h_lambda_sum(wide, 1.0, lambda);
        std::printf("%8.2f %14.6g %14.6g%s\n", lambda, gamma0(lambda, spec).gamma0, h.value,
                    h.converged ? "" : "  (partial sum)");
    }

    McMomentsConfig cfg;
    cfg.solver.spec = spec;
    cfg.solver.mode_k = 16;
    cfg.solver.grid_n = 33;
    cfg.solver.dt = 2e-3;
    cfg.solver.T = 1.0;
    cfg.mu = InitialMeasure::make_uniform(1, 1.0);
    cfg.n_samples = 400;
    cfg.t_list = {0.5, 1.0};
    cfg.x_list = {{0.0}};
    cfg.threads = default_thread_count();
    std::printf("\n%6s %14s %12s %14s\n", "t", "E u^2", "std err", "upper bound");
    for (const auto& e : mc_moments(cfg))
        std::printf("%6.2f %14.6g %12.3g %14.6g\n", e.t, e.value, e.std_err, e.upper_bound);
}
