#include <catch2/catch_amalgamated.hpp>

#include "wedge_xva/analytic1d.hpp"
#include "wedge_xva/errors.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <random>

using namespace wxva;
using Catch::Approx;

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Discounted first-passage transform: E[e^{-rate tau} 1{tau <= T}] for x0 + W.
double discounted_default_prob(double x, double T, double rate)
{
    if (rate == 0.0) return std::erfc(x / std::sqrt(2.0 * T));
    const double k = std::sqrt(2.0 * rate);
    const double sT = std::sqrt(T);
    return std::exp(-x * k) * norm_cdf(-(x - k * T) / sT) + std::exp(x * k) * norm_cdf(-(x + k * T) / sT);
}

} // namespace

TEST_CASE("survival_1d", "[analytic1d]")
{
    CHECK(survival_1d(1.0, 1.0) == Approx(0.682689492).epsilon(1e-9));
    CHECK(survival_1d(2.5, 0.0) == 1.0);
    CHECK(survival_1d(2.9043, 5.0) == Approx(0.806).margin(0.002));
    CHECK_THROWS_AS(survival_1d(1.0, -0.1), DomainError);

    for (int i = 1; i <= 50; ++i) {
        for (int j = 1; j <= 50; ++j) {
            const double x = 0.1 * i;
            const double tau = 0.2 * j;
            CHECK(survival_1d(x, tau + 0.2) <= survival_1d(x, tau));
            CHECK(survival_1d(x + 0.1, tau) >= survival_1d(x, tau));
            if (survival_1d(x, tau) < 0.999) CHECK(survival_1d(x + 0.1, tau) > survival_1d(x, tau));
        }
    }
}

TEST_CASE("first_passage_density", "[analytic1d]")
{
    CHECK(first_passage_density(1.0, 1.0) == Approx(0.241970725).epsilon(1e-8));
    // Numerical derivative of the survival curve.
    const double h = 1e-5;
    const double fd = -(survival_1d(1.0, 1.0 + h) - survival_1d(1.0, 1.0 - h)) / (2.0 * h);
    CHECK(first_passage_density(1.0, 1.0) == Approx(fd).epsilon(1e-8));
    CHECK(first_passage_density(1.0, 1e-4) < 1e-300);

    boost::math::quadrature::tanh_sinh<double> integrator;
    for (double x0 : {0.1, 0.7, 1.5, 3.0, 5.0}) {
        for (double tau : {0.5, 5.0, 100.0}) {
            const double mass = integrator.integrate([&](double s) { return s > 0.0 ? first_passage_density(x0, s) : 0.0; },
                                                     0.0, tau);
            CHECK(mass == Approx(1.0 - survival_1d(x0, tau)).margin(1e-8));
            CHECK(mass <= 1.0);
        }
    }
}

TEST_CASE("default leg against the closed-form discounted transform", "[analytic1d]")
{
    for (double rate : {0.0, 0.01, 0.05}) {
        for (double x : {0.05, 0.4, 1.4713, 2.9043, 6.0}) {
            for (double T : {0.25, 1.0, 5.0, 10.0}) {
                INFO("rate=" << rate << " x=" << x << " T=" << T);
                CHECK(default_leg(x, T, rate, 0.4) == Approx(0.6 * discounted_default_prob(x, T, rate)).margin(1e-10));
            }
        }
    }
}

TEST_CASE("cds legs limits", "[analytic1d]")
{
    const auto contract = CdsContract::with_frequency(5.0, 0.02, 4, 0.03);
    const auto far = cds_legs(contract, 50.0, 0.4);
    double annuity = 0.0;
    for (std::size_t i = 0; i < contract.payment_dates().size(); ++i) {
        annuity += discount_factor(0.0, contract.payment_dates()[i], 0.03) * contract.accrual(i);
    }
    CHECK(far.default_leg == Approx(0.0).margin(1e-10));
    CHECK(far.coupon_leg == Approx(0.02 * annuity).margin(1e-10));
    CHECK(cds_legs(contract, 1.0, 1.0).default_leg == 0.0);

    const auto ge = CdsContract::with_frequency(5.0, 1.0, 4, 0.0);
    const auto legs = cds_legs(ge, 2.9043, 0.4);
    CHECK(legs.coupon_leg > 0.0);
    CHECK(legs.coupon_leg < 5.0);
    CHECK(legs.default_leg > 0.0);
    CHECK(legs.default_leg < 5.0);
}

TEST_CASE("breakeven coupon", "[analytic1d]")
{
    const auto contract = CdsContract::with_frequency(5.0, 0.0, 4, 0.0);
    // With zero rate the default leg is (1-R) P(tau <= T).
    double annuity = 0.0;
    for (std::size_t i = 0; i < contract.payment_dates().size(); ++i) {
        annuity += survival_1d(2.9043, contract.payment_dates()[i]) * contract.accrual(i);
    }
    const double want_ge = 0.6 * std::erfc(2.9043 / std::sqrt(10.0)) / annuity;
    CHECK(breakeven_coupon(contract, 2.9043, 0.4) == Approx(want_ge).epsilon(1e-10));
    CHECK(breakeven_coupon(contract, 2.9043, 0.4) == Approx(0.025313).margin(5e-6));
    CHECK(breakeven_coupon(contract, 1.4713, 0.5) == Approx(0.075255).margin(5e-6));

    const auto rated = contract.with_coupon(0.0);
    const auto priced = CdsContract::with_frequency(5.0, breakeven_coupon(rated, 1.9, 0.4), 4, 0.0);
    const auto legs = cds_legs(priced, 1.9, 0.4);
    CHECK(legs.coupon_leg == Approx(legs.default_leg).epsilon(1e-12));

    CHECK(breakeven_coupon(contract, 2.0, 1.0) == 0.0);
    CHECK(breakeven_coupon(contract, 60.0, 0.4) < 1e-12);

    for (double x = 0.5; x < 4.0; x += 0.25) {
        for (double R = 0.0; R < 0.8; R += 0.1) {
            CHECK(breakeven_coupon(contract, x + 0.25, R) < breakeven_coupon(contract, x, R));
            CHECK(breakeven_coupon(contract, x, R + 0.1) < breakeven_coupon(contract, x, R));
        }
    }
}

TEST_CASE("calibration round trip", "[analytic1d]")
{
    const auto contract = CdsContract::with_frequency(5.0, 0.0, 4, 0.01);
    struct Row { double value, sigma, recovery; };
    for (const Row& row : {Row{0.0359, 0.0244, 0.5}, Row{0.3035, 0.1045, 0.4}, Row{0.1199, 0.063, 0.4}}) {
        const double spread = breakeven_coupon(contract, row.value / row.sigma, row.recovery);
        const double sigma = calibrate_sigma(row.value, spread, row.recovery, contract);
        CHECK(sigma == Approx(row.sigma).margin(1e-6));
        const double achieved = breakeven_coupon(contract, row.value / sigma, row.recovery);
        CHECK(achieved == Approx(spread).epsilon(1e-10));
    }
    CHECK_THROWS_AS(calibrate_sigma(0.3035, 0.0, 0.4, contract), CalibrationError);
    CHECK_THROWS_AS(calibrate_sigma(0.3035, 50.0, 0.4, contract), CalibrationError);
}

TEST_CASE("CDS value grid", "[analytic1d][grid]")
{
    const double x0 = 2.9043;
    const double R = 0.4;
    const auto base = CdsContract::with_frequency(5.0, 0.0, 4, 0.01);
    const double c = breakeven_coupon(base, x0, R);
    const auto contract = base.with_coupon(c);
    CdsGridSpec spec;
    spec.extra_distances = {x0};
    const CdsValueGrid grid(contract, R, spec);

    for (double y : {0.0, 0.1, 1.0, 5.0, 30.0}) CHECK(grid.value(5.0, y) == 0.0);
    CHECK(grid.value(0.0, x0) == Approx(0.0).margin(1e-10));
    CHECK(grid.value(0.0, 0.5 * x0) > 0.0);
    CHECK(grid.value(1.3, 0.0) == Approx(1.0 - R).margin(1e-12));
    CHECK_THROWS_AS(grid.value(1.0, -0.1), DomainError);

    // Top of the grid sits on the risk-free annuity asymptote.
    for (double t : {0.0, 1.1, 2.6, 4.9}) {
        const double top = grid.y_max();
        double riskfree = 0.0;
        for (std::size_t i = 0; i < contract.payment_dates().size(); ++i) {
            const double d = contract.payment_dates()[i];
            if (d > t) riskfree += discount_factor(t, d, 0.01) * contract.accrual(i);
        }
        CHECK(std::abs(grid.value(t, top * (1.0 - 1e-9)) + c * riskfree) < 1e-9);
        CHECK(grid.value(t, 2.0 * top) == Approx(-c * riskfree).margin(1e-14));
    }

    // Monotone decreasing in distance at every node row.
    const auto ys = grid.distances();
    for (double t : grid.times()) {
        if (t >= 5.0) continue;
        for (std::size_t j = 1; j < ys.size(); ++j) CHECK(grid.value(t, ys[j]) <= grid.value(t, ys[j - 1]) + 1e-15);
    }

    // Interpolated values against direct leg pricing, relative to the default-leg scale.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut(0.0, 5.0), uy(0.02, 8.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double t = ut(rng);
        const double y = uy(rng);
        const auto legs = cds_legs(contract, t, y, R);
        const double direct = legs.default_leg - legs.coupon_leg;
        const double scale = std::max(std::abs(direct), 1e-2 * (1.0 - R));
        const double err = std::abs(grid.value(t, y) - direct) / scale;
        if (err > 1e-3) WARN("t=" << t << " y=" << y << " direct=" << direct << " grid=" << grid.value(t, y));
        worst = std::max(worst, err);
    }
    INFO("worst relative grid error " << worst);
    CHECK(worst < 1e-3);

    const auto repriced = grid.with_coupon(2.0 * c);
    const auto legs = cds_legs(contract.with_coupon(2.0 * c), 0.0, x0, R);
    CHECK(repriced.value(0.0, x0) == Approx(legs.default_leg - legs.coupon_leg).margin(1e-10));
}
