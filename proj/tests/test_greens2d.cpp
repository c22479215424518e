#include <catch2/catch_amalgamated.hpp>

#include "wedge_xva/errors.hpp"
#include "wedge_xva/geometry.hpp"
#include "wedge_xva/greens2d.hpp"
#include "wedge_xva/quadrature.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace wxva;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed form of the radial integral: int_0^inf e^{-a r^2} I_nu(b r) r dr
// = sqrt(pi) b / (8 a^{3/2}) e^{b^2/8a} [I_{(nu-1)/2} + I_{(nu+1)/2}](b^2/8a).
double survival_closed_form(double x0, double y0, double rho, double tau)
{
    const auto wedge = make_wedge_2d(rho);
    const auto pol = polar_from_xy(x0, y0, wedge);
    const double rp = pol[0], php = pol[1];
    const double a = 1.0 / (2.0 * tau), b = rp / tau, z = b * b / (8.0 * a);
    const double c = std::sqrt(kPi) * b / (8.0 * std::pow(a, 1.5));
    double s = 0.0;
    for (int k = 0; k < 400; ++k) {
        const double nu = (2 * k + 1) * kPi / wedge.phi0;
        s += std::sin(nu * php) / (2 * k + 1) *
             (boost::math::cyl_bessel_i((nu - 1) / 2, z) + boost::math::cyl_bessel_i((nu + 1) / 2, z));
    }
    return 4.0 / (kPi * tau) * c * std::exp(-z) * s;
}

double half_plane(double tau, double r, double phi, double rp, double php)
{
    // Wedge angle pi: reflection across the line phi = 0.
    const double x = r * std::cos(phi), y = r * std::sin(phi);
    const double xp = rp * std::cos(php), yp = rp * std::sin(php);
    const double d1 = (x - xp) * (x - xp) + (y - yp) * (y - yp);
    const double d2 = (x - xp) * (x - xp) + (y + yp) * (y + yp);
    return (std::exp(-d1 / (2 * tau)) - std::exp(-d2 / (2 * tau))) / (2 * kPi * tau);
}

// int int f(r, phi) r dr dphi over the wedge by tensor Gauss-Legendre.
template <class F>
double wedge_integral(F f, double phi0, double r_lo, double r_hi, int nr = 12, int nphi = 8)
{
    QuadratureRule rr, pr;
    for (int k = 0; k < nr; ++k) append_gauss_legendre(rr, 16, r_lo + (r_hi - r_lo) * k / nr, r_lo + (r_hi - r_lo) * (k + 1) / nr);
    for (int k = 0; k < nphi; ++k) append_gauss_legendre(pr, 16, phi0 * k / nphi, phi0 * (k + 1) / nphi);
    double s = 0.0;
    for (std::size_t i = 0; i < rr.size(); ++i) {
        for (std::size_t j = 0; j < pr.size(); ++j) s += rr.weights[i] * pr.weights[j] * f(rr.nodes[i], pr.nodes[j]) * rr.nodes[i];
    }
    return s;
}

} // namespace

TEST_CASE("series kernel basics", "[greens2d]")
{
    const double phi0 = std::acos(-0.8);
    CHECK(green2d_series(0.5, 1.0, 0.0, 1.2, 1.0, phi0) == 0.0);
    CHECK(green2d_series(0.5, 1.0, phi0, 1.2, 1.0, phi0) == 0.0);
    CHECK(green2d_images(0.5, 1.0, 0.0, 1.2, 1.0, phi0) == 0.0);
    CHECK(green2d_images(0.5, 1.0, phi0, 1.2, 1.0, phi0) == 0.0);
    CHECK_THROWS_AS(green2d_series(0.0, 1.0, 1.0, 1.0, 1.0, phi0), DomainError);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double tau = 0.1 + u(rng), r = 0.2 + 2 * u(rng), rp = 0.2 + 2 * u(rng);
        const double phi = phi0 * (0.05 + 0.9 * u(rng)), php = phi0 * (0.05 + 0.9 * u(rng));
        const double g = green2d_series(tau, r, phi, rp, php, phi0);
        CHECK(green2d_series(tau, rp, php, r, phi, phi0) == Catch::Approx(g).epsilon(1e-12));
    }
}

TEST_CASE("half-plane series equals reflection formula", "[greens2d]")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double tau = 0.2 + u(rng), r = 0.2 + 1.5 * u(rng), rp = 0.2 + 1.5 * u(rng);
        const double phi = kPi * (0.05 + 0.9 * u(rng)), php = kPi * (0.05 + 0.9 * u(rng));
        const double exact = half_plane(tau, r, phi, rp, php);
        CHECK(green2d_series(tau, r, phi, rp, php, kPi) == Catch::Approx(exact).epsilon(1e-10));
    }
}

TEST_CASE("series and images agree", "[greens2d]")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double phi0 : {kPi / 3, 2 * kPi / 3, std::acos(-0.8)}) {
        for (int k = 0; k < 20; ++k) {
            const double tau = 0.1 + 1.9 * u(rng), r = 0.2 + 2.8 * u(rng), rp = 0.2 + 2.8 * u(rng);
            const double phi = phi0 * (0.02 + 0.96 * u(rng)), php = phi0 * (0.02 + 0.96 * u(rng));
            const double s = green2d_series(tau, r, phi, rp, php, phi0);
            const double i = green2d_images(tau, r, phi, rp, php, phi0);
            CHECK(std::abs(s - i) <= 1e-6 * std::max(std::abs(i), 1e-8 / (2 * kPi * tau)));
        }
    }
}

TEST_CASE("kernel concentrates as tau -> 0", "[greens2d]")
{
    const double phi0 = 2 * kPi / 3, rp = 1.3, php = 0.9, tau = 1e-3;
    auto bump = [&](double r, double phi) { return std::cos(r - rp) * std::cos(phi - php) * (1 + 0.2 * r); };
    const double w = 10 * std::sqrt(tau);
    QuadratureRule rr, pr;
    append_gauss_legendre(rr, 60, rp - w, rp + w);
    append_gauss_legendre(pr, 60, php - w / rp, php + w / rp);
    double s = 0.0;
    for (std::size_t i = 0; i < rr.size(); ++i) {
        for (std::size_t j = 0; j < pr.size(); ++j) {
            s += rr.weights[i] * pr.weights[j] * rr.nodes[i] * bump(rr.nodes[i], pr.nodes[j]) *
                 green2d_images(tau, rr.nodes[i], pr.nodes[j], rp, php, phi0);
        }
    }
    CHECK(s == Catch::Approx(bump(rp, php)).epsilon(5e-3));
}

TEST_CASE("joint survival", "[greens2d]")
{
    CHECK(survival_2d(0.0, 1.0, 1.0, 0.0, 1.0) == Catch::Approx(0.466065).margin(1e-6));
    const double s1 = std::erf(1.0 / std::sqrt(2.0));
    CHECK(std::abs(survival_2d(0.0, 1.0, 1.0, 0.0, 1.0) - s1 * s1) < 1e-10);
    CHECK(std::abs(survival_2d(0.0, 50.0, 1.3, 0.4, 1.0) - std::erf(1.3 / std::sqrt(2.0))) < 1e-6);
    CHECK(std::abs(survival_2d(0.0, 0.7, 50.0, -0.6, 2.0) - std::erf(0.7 / std::sqrt(4.0))) < 1e-6);

    for (auto c : {std::array{1.0, 1.0, 0.5, 1.0}, std::array{1.4713, 2.9043, 0.8, 5.0}, std::array{0.4, 2.0, -0.7, 3.0},
                   std::array{2.5, 0.3, 0.95, 0.5}}) {
        const double q = survival_2d(0.0, c[0], c[1], c[2], c[3]);
        CHECK(q == Catch::Approx(survival_closed_form(c[0], c[1], c[2], c[3])).epsilon(1e-9));
        CHECK(q == Catch::Approx(survival_2d(0.0, c[1], c[0], c[2], c[3])).epsilon(1e-10));
        CHECK(survival_2d(1.0, c[0], c[1], c[2], c[3] + 1.0) == Catch::Approx(q).epsilon(1e-12));
    }
    // Positive correlation makes joint survival more likely.
    CHECK(survival_2d(0.0, 1.0, 1.0, 0.6, 1.0) > survival_2d(0.0, 1.0, 1.0, 0.0, 1.0));
    CHECK_THROWS_AS(survival_2d(0.0, 0.0, 1.0, 0.0, 1.0), DomainError);
}

TEST_CASE("kernel mass equals survival and decreases in tau", "[greens2d]")
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const double rho = -0.8 + 1.6 * u(rng), x0 = 0.5 + 1.5 * u(rng), y0 = 0.5 + 1.5 * u(rng);
        const auto wedge = make_wedge_2d(rho);
        const auto pol = polar_from_xy(x0, y0, wedge);
        double previous = 1.0;
        for (double tau : {0.3, 0.8}) {
            const double mass = wedge_integral([&](double r, double phi) { return green2d_series(tau, r, phi, pol[0], pol[1], wedge.phi0); },
                                               wedge.phi0, std::max(0.0, pol[0] - 9 * std::sqrt(tau)), pol[0] + 9 * std::sqrt(tau));
            CHECK(mass == Catch::Approx(survival_2d(0.0, x0, y0, rho, tau)).epsilon(1e-6));
            CHECK(mass <= previous);
            previous = mass;
        }
    }
}

TEST_CASE("Chapman-Kolmogorov on the wedge", "[greens2d]")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double phi0 = std::acos(-0.3);
    for (int k = 0; k < 5; ++k) {
        const double t1 = 0.2 + 0.3 * u(rng), t2 = 0.2 + 0.3 * u(rng);
        const double r = 0.6 + u(rng), rp = 0.6 + u(rng);
        const double phi = phi0 * (0.2 + 0.6 * u(rng)), php = phi0 * (0.2 + 0.6 * u(rng));
        const double direct = green2d_series(t1 + t2, r, phi, rp, php, phi0);
        const double composed = wedge_integral(
            [&](double s, double psi) { return green2d_series(t2, r, phi, s, psi, phi0) * green2d_series(t1, s, psi, rp, php, phi0); },
            phi0, 0.0, 7.0, 10, 6);
        CHECK(composed == Catch::Approx(direct).epsilon(1e-4));
    }
}

TEST_CASE("2D CVA and DVA", "[greens2d]")
{
    const auto ps = make_issuer(Role::ProtectionSeller, 0.0359, 0.0244, 0.5);
    const auto rn = make_issuer(Role::ReferenceName, 0.3035, 0.1045, 0.4);
    const auto pb = make_issuer(Role::ProtectionBuyer, 0.1199, 0.063, 0.4);
    const auto base = CdsContract::with_frequency(5.0, 0.0, 4, 0.01);
    const auto contract = base.with_coupon(breakeven_coupon(base, rn.x0(), rn.recovery));
    const CdsValueGrid grid(contract, rn.recovery);

    double previous = -1.0;
    for (double rho : {0.0, 0.3, 0.6, 0.8}) {
        const double cva = cva_2d(0.0, ps, rn, rho, grid);
        CHECK(cva > previous);
        previous = cva;
    }
    CHECK(previous > 0.0);

    auto ps_full = ps;
    ps_full.recovery = 1.0;
    CHECK(cva_2d(0.0, ps_full, rn, 0.8, grid) == 0.0);

    BoundaryQuadrature fine;
    fine.time_points = 16;
    fine.radial_panels = 24;
    fine.radial_points = 16;
    CHECK(cva_2d(0.0, ps, rn, 0.8, grid) == Catch::Approx(cva_2d(0.0, ps, rn, 0.8, grid, fine)).epsilon(1e-4));
    const double dva = dva_2d(0.0, pb, rn, 0.5, grid);
    CHECK(dva > 0.0);
    CHECK(dva == Catch::Approx(dva_2d(0.0, pb, rn, 0.5, grid, fine)).epsilon(1e-4));
    // Zero coupon: V >= 0 everywhere, so there is nothing to lose on the buyer's default.
    CHECK(dva_2d(0.0, pb, rn, 0.5, CdsValueGrid(base, rn.recovery)) == 0.0);
}
