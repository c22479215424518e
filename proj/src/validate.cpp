#include "wedge_xva/commands.hpp"

#include "wedge_xva/eigen_cache.hpp"
#include "wedge_xva/errors.hpp"
#include "wedge_xva/geometry.hpp"
#include "wedge_xva/greens2d.hpp"
#include "wedge_xva/quadrature.hpp"
#include "wedge_xva/special.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace wxva {

namespace {

constexpr double kPi = std::numbers::pi;

struct Check {
    std::string name;
    double measured;
    double tolerance;
};

// Full-line trapezoid for f; independent of the panelled rule inside special_f.
double f_trapezoid(double p, double q)
{
    auto g = [&](double zeta) { return std::exp(-p * (std::cosh(2.0 * q * zeta) - std::cos(q))) / (zeta * zeta + 0.25); };
    const double L = std::acosh(60.0 / p + 1.0) / (2.0 * std::abs(q));
    const int n = static_cast<int>(std::ceil(2.0 * L / 0.005));
    const double h = 2.0 * L / n;
    double s = 0.5 * (g(-L) + g(L));
    for (int i = 1; i < n; ++i) s += g(-L + i * h);
    return 1.0 - s * h / (2.0 * kPi);
}

double uniform(std::mt19937_64& rng, double a, double b) { return a + (b - a) * double(rng() >> 11) * 0x1p-53; }

EigenBasis basis_for(const CommandOptions& o, const CorrelationTriplet& rho, int nodes)
{
    CacheKey key;
    key.rho = rho;
    key.mesh.n_points = nodes;
    key.modes = 100;
    return load_or_solve(o.cache_dir, key, o.threads);
}

TradeParties table1()
{
    return {make_issuer(Role::ProtectionSeller, 0.0359, 0.0244, 0.5, "AIG"), make_issuer(Role::ReferenceName, 0.3035, 0.1045, 0.4, "GE"),
            make_issuer(Role::ProtectionBuyer, 0.1199, 0.063, 0.4, "UNICREDIT")};
}

} // namespace

int cmd_validate(const CommandOptions& o, std::ostream& out)
{
    using clock = std::chrono::steady_clock;
    const std::uint64_t seed = o.seed.value_or(20111215);
    std::vector<std::function<Check()>> suite;

    suite.push_back([] {
        double worst = 0.0;
        for (double q : {0.1, 1.0, kPi, 5.0}) worst = std::max(worst, std::abs(special_f(0.0, q)));
        return Check{"special_f_at_zero", worst, 1e-12};
    });
    suite.push_back([] {
        double worst = 0.0;
        for (double lz = -3.0; lz <= 4.0; lz += 0.05) {
            const double z = std::pow(10.0, lz);
            const double want = std::sqrt(2.0 / (kPi * z)) * 0.5 * -std::expm1(-2.0 * z);
            worst = std::max(worst, std::abs(bessel_i_scaled(0.5, z) - want) / want);
        }
        return Check{"bessel_half_order_identity", worst, 1e-12};
    });
    suite.push_back([] {
        double worst = 0.0;
        for (double p : {0.05, 0.7, 3.0, 25.0}) {
            for (double q : {0.3, 2.0, 4.0, 9.0}) worst = std::max(worst, std::abs(special_f(p, q) - f_trapezoid(p, q)));
        }
        return Check{"special_f_dual_quadrature", worst, 1e-12};
    });
    suite.push_back([] {
        double worst = 0.0;
        for (double x0 : {0.5, 1.47, 2.9}) {
            const auto mass = adaptive_gauss_kronrod([&](double s) { return first_passage_density(x0, s); }, 0.0, 5.0, 1e-13);
            worst = std::max(worst, std::abs(1.0 - mass.value - survival_1d(x0, 5.0)));
        }
        return Check{"survival_1d_density_mass", worst, 1e-10};
    });
    suite.push_back([] {
        const auto contract = CdsContract::with_frequency(5.0, 0.0, 4, 0.01);
        double worst = 0.0;
        for (const auto& i : {table1().seller, table1().reference, table1().buyer}) {
            const double spread = breakeven_coupon(contract, i.x0(), i.recovery);
            worst = std::max(worst, std::abs(calibrate_sigma(i.ln_distance, spread, i.recovery, contract) - i.sigma));
        }
        return Check{"calibration_round_trip", worst, 1e-6};
    });
    suite.push_back([seed] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (double rho : {-0.5, 0.3, 0.8}) {
            const double phi0 = make_wedge_2d(rho).phi0;
            for (int k = 0; k < 20; ++k) {
                const double tau = uniform(rng, 0.1, 2.0), r = uniform(rng, 0.2, 3.0), rp = uniform(rng, 0.2, 3.0);
                const double phi = uniform(rng, 0.0, phi0), php = uniform(rng, 0.0, phi0);
                const double a = green2d_series(tau, r, phi, rp, php, phi0), b = green2d_images(tau, r, phi, rp, php, phi0);
                worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-8 / (2.0 * kPi * tau)));
            }
        }
        return Check{"green2d_series_vs_images", worst, 1e-6};
    });
    suite.push_back([] {
        double worst = 0.0;
        for (double T : {0.5, 2.0, 5.0}) {
            worst = std::max(worst, std::abs(survival_2d(0, 0.9, 1.6, 0.0, T) - survival_1d(0.9, T) * survival_1d(1.6, T)));
        }
        return Check{"survival_2d_factorization", worst, 1e-6};
    });
    suite.push_back([&o] {
        const auto b = basis_for(o, CorrelationTriplet(0.8, 0.2, 0.5), 1500);
        const std::array<std::pair<int, double>, 4> ref{{{0, 5.2}, {2, 16.3}, {3, 21.3}, {29, 140.0}}};
        double worst = 0.0;
        for (auto [n, v] : ref) worst = std::max(worst, std::abs(b.eigenvalues()(n) - v) / v);
        return Check{"eigenvalues_fig3", worst, 3e-2};
    });
    suite.push_back([&o] {
        const auto b = basis_for(o, CorrelationTriplet(0, 0, 0), 1500);
        return Check{"octant_ground_eigenvalue", std::abs(b.eigenvalues()(0) - 12.0) / 12.0, 1e-2};
    });
    suite.push_back([&o] {
        const auto b = basis_for(o, CorrelationTriplet(0, 0, 0), 1500);
        const AngularDomain d(CorrelationTriplet(0, 0, 0));
        const double s = survival_1d(1.0, 1.0);
        return Check{"survival_3d_factorization", std::abs(survival_3d(0, {1, 1, 1}, d, 1.0, b) - s * s * s), 2e-3};
    });
    suite.push_back([&o] {
        const CorrelationTriplet rho(0.8, 0.5, 0.3);
        const auto b = basis_for(o, rho, 1500);
        const AngularDomain d(rho);
        const double q = survival_3d(0, {1.4, 2.1, 50.0}, d, 5.0, b);
        return Check{"survival_3d_reduction", std::abs(q - survival_2d(0, 1.4, 2.1, 0.8, 5.0)), 2e-3};
    });
    suite.push_back([&o, seed] {
        SimConfig c;
        c.n_paths = 100000;
        c.steps_per_year = 50;
        c.seed = seed;
        c.threads = o.threads;
        const auto paths = simulate_default_times({1.47, 2.9, 1.9}, CorrelationTriplet(0.8, 0.5, 0.3), 5.0, c);
        const auto e = estimate_survival(paths, SurvivalSet::Reference, 5.0);
        return Check{"mc_marginal_z", std::abs(e.value - survival_1d(2.9, 5.0)) / e.standard_error, 3.0};
    });
    suite.push_back([&o, seed] {
        const auto p = table1();
        const auto base = CdsContract::with_frequency(5.0, 0.0, 4, 0.01);
        const CdsValueGrid grid(base.with_coupon(breakeven_coupon(base, p.reference.x0(), 0.4)), 0.4);
        SimConfig c;
        c.n_paths = 100000;
        c.steps_per_year = 50;
        c.seed = seed;
        c.threads = o.threads;
        const auto paths = simulate_default_times({p.seller.x0(), p.reference.x0(), 1e6}, CorrelationTriplet(0.8, 0.5, 0.3), 5.0, c);
        const auto e = estimate_cva_dva(paths, grid, 0.5, 0.4, McMode::Bilateral).cva;
        return Check{"mc_cva_vs_2d_z", std::abs(e.value - cva_2d(0, p.seller, p.reference, 0.8, grid)) / e.standard_error, 3.0};
    });

    if (o.header) out << "# wedge_xva validate seed " << seed << '\n';
    int passed = 0;
    for (const auto& run : suite) {
        const auto t0 = clock::now();
        const Check c = run();
        const double seconds = std::chrono::duration<double>(clock::now() - t0).count();
        const double tol = c.tolerance * o.tolerance_scale;
        const bool ok = c.measured <= tol;
        passed += ok;
        char line[256];
        std::snprintf(line, sizeof line, "%s %-28s measured %.3e  tolerance %.1e", ok ? "PASS" : "FAIL", c.name.c_str(), c.measured, tol);
        out << line;
        if (o.header) {
            std::snprintf(line, sizeof line, "  %.2f s", seconds);
            out << line;
        }
        out << '\n';
    }
    out << passed << '/' << suite.size() << " checks passed\n";
    return passed == static_cast<int>(suite.size()) ? kExitOk : kExitNumerical;
}

} // namespace wxva
