// short tour: gap measure, a few S_r norms, a small walk against its Gaussian model,
// and the Bernoulli convolution transform.  Runs in well under a minute.

#include <cstdio>

#include <isomlab/io.hpp>

using namespace isomlab;

int main() {
    auto mu = prepared_gap_measure();
    std::printf("gap measure: %zu atoms, M3 = %.4f, t_gap = %.4f\n", mu.size(), moment(mu, 3), t_gap(mu, 8).value);

    std::printf("\n%8s %12s %12s\n", "r", "||S_r P_8||", "1-norm/r^2");
    for (double r : {0.05, 0.2, 1.0, 4.0}) {
        double n = band_singular_values(mu, r, 8)(0);
        std::printf("%8.3f %12.6f %12.4f\n", r, n, (1 - n) / (r * r));
    }

    // l = 50 walk, model fitted on a second ensemble
    auto fit = simulate_walk(mu, Vec::Zero(3), 50, 100000, 1);
    auto test = simulate_walk(mu, Vec::Zero(3), 50, 100000, 2);
    auto g = gaussian_fit(fit);
    auto rep = llt_report(test, g, radial_probe_balls(g, unit3(0)));
    std::printf("\nwalk l=50: sigma = %.4f, max |z| = %.2f over %zu balls, radial chi2 p = %.3f\n", g.sigma, rep.max_abs_z(),
                rep.rows.size(), rep.p_value);

    auto b = bernoulli_ifs();
    NuHatEvaluator ev(b);
    std::printf("\n%8s %14s %14s\n", "xi", "nu_hat", "sinc(4 pi xi)");
    for (double xi : {0.1, 0.3, 1.0, 2.7}) {
        double a = 4 * std::numbers::pi * xi;
        std::printf("%8.2f %14.10f %14.10f\n", xi, ev(Vec::Constant(1, xi)).value.real(), std::sin(a) / a);
    }
    return 0;
}
