#include <catch2/catch_amalgamated.hpp>

#include "wedge_xva/special.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <numbers>

using namespace wxva;
using Catch::Approx;

namespace {

// Trapezoid on the full line; independent of the panelled Gauss-Legendre path. The
// integrand is analytic in a strip of half-width 1/2, so the error is O(exp(-pi/h)).
double zeta_trapezoid(double p, double q, double offset)
{
    auto g = [&](double zeta) {
        return std::exp(-p * (std::cosh(2.0 * q * zeta) - offset)) / (zeta * zeta + 0.25);
    };
    const double L = std::acosh(60.0 / p + 1.0) / (2.0 * std::abs(q));
    const int n = static_cast<int>(std::ceil(2.0 * L / 0.005));
    const double h = 2.0 * L / n;
    double s = 0.5 * (g(-L) + g(L));
    for (int i = 1; i < n; ++i) s += g(-L + i * h);
    return s * h / (2.0 * std::numbers::pi);
}

double f_by_trapezoid(double p, double q) { return 1.0 - zeta_trapezoid(p, q, std::cos(q)); }

double half_order_scaled(double z)
{
    return std::sqrt(2.0 / (std::numbers::pi * z)) * 0.5 * -std::expm1(-2.0 * z);
}

} // namespace

TEST_CASE("I_{1/2} closed form", "[special][bessel]")
{
    CHECK(bessel_i_scaled(0.5, 1.0) * std::exp(1.0) == Approx(0.937674).epsilon(1e-6));
    double worst = 0.0;
    for (double lz = -3.0; lz <= 4.0; lz += 0.01) {
        const double z = std::pow(10.0, lz);
        const double want = half_order_scaled(z);
        worst = std::max(worst, std::abs(bessel_i_scaled(0.5, z) - want) / want);
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("scaled Bessel agrees with Boost across regimes", "[special][bessel]")
{
    double worst = 0.0;
    for (double nu : {0.0, 0.5, 1.0, 1.26, 2.3, 3.7, 5.0, 7.5, 11.0, 14.9, 19.9, 20.0, 27.3, 45.0, 80.0}) {
        for (double lz = -2.0; lz <= std::log10(600.0); lz += 0.05) {
            const double z = std::pow(10.0, lz);
            const double want = boost::math::cyl_bessel_i(nu, z) * std::exp(-z);
            if (want < 1e-280) continue;
            const double got = bessel_i_scaled(nu, z);
            worst = std::max(worst, std::abs(got - want) / want);
        }
    }
    INFO("worst relative error " << worst);
    CHECK(worst < 1e-12);
}

TEST_CASE("scaled Bessel large argument asymptotics", "[special][bessel]")
{
    const double z = 1e4;
    const double nu = 7.0;
    const double mu = 4.0 * nu * nu;
    const double a1 = (mu - 1.0) / (8.0 * z);
    const double a2 = (mu - 1.0) * (mu - 9.0) / (2.0 * 64.0 * z * z);
    const double scaled = bessel_i_scaled(nu, z) * std::sqrt(2.0 * std::numbers::pi * z);
    CHECK(std::abs(scaled - (1.0 - a1)) <= a2 * 1.0000001);
    CHECK(bessel_i_scaled(3.0, 0.0) == 0.0);
    CHECK(bessel_i_scaled(0.0, 0.0) == 1.0);
}

TEST_CASE("scaled Bessel is monotone decreasing in order", "[special][bessel]")
{
    for (double z : {0.1, 3.0, 40.0, 900.0}) {
        double prev = bessel_i_scaled(0.5, z);
        for (double nu = 1.0; nu < 120.0; nu += 0.7) {
            const double cur = bessel_i_scaled(nu, z);
            CHECK(cur <= prev);
            prev = cur;
        }
    }
}

TEST_CASE("f(0, q) vanishes and f tends to one", "[special][images]")
{
    for (double q : {0.1, 1.0, std::numbers::pi, 5.0}) CHECK(std::abs(special_f(0.0, q)) < 1e-12);
    CHECK(special_f(200.0, 1.0) == Approx(1.0).margin(1e-10));
    CHECK(special_f(3.0, 0.0) == 0.0);
}

TEST_CASE("f dual-quadrature oracle", "[special][images]")
{
    CHECK(std::abs(special_f(1.0, std::numbers::pi / 2) - f_by_trapezoid(1.0, std::numbers::pi / 2)) < 1e-12);
    for (double p : {0.05, 0.7, 3.0, 25.0}) {
        for (double q : {0.3, 2.0, 4.0, 9.0}) {
            INFO("p=" << p << " q=" << q);
            CHECK(std::abs(special_f(p, q) - f_by_trapezoid(p, q)) < 1e-12);
        }
    }
}

TEST_CASE("h symmetries", "[special][images]")
{
    const double pi = std::numbers::pi;
    for (double p : {0.2, 1.0, 6.0}) {
        CHECK(special_h(p, 0.0) == Approx(special_f(p, pi)).epsilon(1e-14));
        CHECK(special_h(p, 1.3) == Approx(special_h(p, -1.3)).epsilon(1e-14));
        const double want = 0.5 * (f_by_trapezoid(p, 4.0 * pi) - f_by_trapezoid(p, 2.0 * pi));
        CHECK(std::abs(special_h(p, 3.0 * pi) - want) < 1e-12);
    }
}

TEST_CASE("jhat against trapezoid", "[special][images]")
{
    for (double p : {0.1, 2.0, 30.0}) {
        for (double q : {0.5, 2.5, 7.0}) {
            const double want = zeta_trapezoid(p, q, 1.0);
            INFO("p=" << p << " q=" << q);
            CHECK(jhat_scaled(p, q) == Approx(want).epsilon(1e-11));
        }
    }
}
