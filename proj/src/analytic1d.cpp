#include "wedge_xva/analytic1d.hpp"

#include "wedge_xva/errors.hpp"
#include "wedge_xva/quadrature.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace wxva {

double survival_1d(double x0, double tau)
{
    if (tau < 0.0) throw DomainError("survival_1d requires tau >= 0");
    if (!(x0 > 0.0)) throw DomainError("survival_1d requires x0 > 0");
    if (tau == 0.0) return 1.0;
    return std::erf(x0 / std::sqrt(2.0 * tau));
}

double first_passage_density(double x0, double s)
{
    if (!(x0 > 0.0) || !(s > 0.0)) throw DomainError("first_passage_density requires x0 > 0 and s > 0");
    const double a = x0 * x0 / (2.0 * s);
    if (a > 1400.0) return 0.0;
    // log form: s^{-3/2} overflows before the Gaussian factor underflows when s is tiny
    return std::exp(std::log(x0) - 0.5 * std::log(2.0 * std::numbers::pi * s * s * s) - a);
}

double default_leg(double y, double horizon, double rate, double recovery)
{
    if (horizon <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0 - recovery;
    const double c = 2.0 * y / std::sqrt(2.0 * std::numbers::pi);
    // s = u^2 turns the density into c u^{-2} exp(-y^2/(2u^2)), smooth and flat at u = 0.
    auto integrand = [&](double u) {
        if (u <= 0.0) return 0.0;
        return c / (u * u) * std::exp(-y * y / (2.0 * u * u) - rate * u * u);
    };
    // The integrand peaks near u = y/sqrt(3); split there so the adaptive rule sees it.
    const double top = std::sqrt(horizon);
    std::vector<double> breaks{0.0};
    for (double b : {0.25 * y, y, 4.0 * y}) {
        if (b < 0.95 * top) breaks.push_back(b);
    }
    breaks.push_back(top);
    double value = 0.0;
    double err = 0.0;
    bool ok = true;
    const double tol = 1e-11 / static_cast<double>(breaks.size());
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const auto r = adaptive_gauss_kronrod(integrand, breaks[k], breaks[k + 1], tol);
        value += r.value;
        err += r.error;
        ok = ok && r.converged;
    }
    if (!ok) {
        throw NumericalError("default-leg quadrature did not converge (y=" + std::to_string(y) +
                             ", horizon=" + std::to_string(horizon) + ", error estimate " + std::to_string(err) + ")");
    }
    return (1.0 - recovery) * value;
}

double risky_annuity(const CdsContract& contract, double t, double y)
{
    double acc = 0.0;
    const auto dates = contract.payment_dates();
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (dates[i] <= t) continue;
        const double s = y > 0.0 ? survival_1d(y, dates[i] - t) : 0.0;
        acc += discount_factor(t, dates[i], contract.rate()) * s * contract.accrual(i);
    }
    return acc;
}

CdsLegs cds_legs(const CdsContract& contract, double t, double y, double recovery)
{
    if (y < 0.0) throw DomainError("cds_legs requires a non-negative distance");
    if (!(recovery >= 0.0 && recovery <= 1.0)) throw DomainError("recovery must lie in [0, 1]");
    CdsLegs legs;
    legs.coupon_leg = contract.coupon() * risky_annuity(contract, t, y);
    legs.default_leg = recovery == 1.0 ? 0.0 : default_leg(y, contract.maturity() - t, contract.rate(), recovery);
    return legs;
}

double breakeven_coupon(const CdsContract& contract, double x0, double recovery)
{
    const double annuity = risky_annuity(contract, 0.0, x0);
    if (!(annuity > 0.0)) throw DomainError("zero annuity: degenerate schedule");
    return cds_legs(contract.with_coupon(0.0), x0, recovery).default_leg / annuity;
}

double calibrate_sigma(double initial_value, double target_spread, double recovery, const CdsContract& contract)
{
    if (!(initial_value > 0.0)) throw DomainError("initial value must be positive");
    // Work in log sigma; spread increases with sigma because x0 = value/sigma shrinks.
    const double lo = std::log(initial_value / 40.0);
    const double hi = std::log(initial_value / 2e-2);
    auto objective = [&](double ls) {
        return breakeven_coupon(contract, initial_value / std::exp(ls), recovery) - target_spread;
    };
    const double f_lo = objective(lo);
    const double f_hi = objective(hi);
    if (!(target_spread > 0.0) || f_lo > 0.0 || f_hi < 0.0) {
        throw CalibrationError("target spread " + std::to_string(target_spread) + " not attainable",
                               std::exp(lo), std::exp(hi));
    }
    std::uintmax_t max_iter = 200;
    const boost::math::tools::eps_tolerance<double> tol(50);
    const auto bracket = boost::math::tools::toms748_solve(objective, lo, hi, f_lo, f_hi, tol, max_iter);
    const double ls = 0.5 * (bracket.first + bracket.second);
    return std::exp(ls);
}

namespace {

std::vector<double> distance_nodes(int n, double y_max)
{
    // Exponential stretching keeps cells small near the barrier.
    constexpr double a = 4.0;
    std::vector<double> y(n);
    for (int j = 0; j < n; ++j) {
        const double s = static_cast<double>(j) / (n - 1);
        y[j] = y_max * std::expm1(a * s) / std::expm1(a);
    }
    y.back() = y_max;
    return y;
}

std::size_t bracket_index(const std::vector<double>& xs, double x)
{
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin());
    if (i == 0) return 0;
    return std::min(i - 1, xs.size() - 2);
}

} // namespace

CdsValueGrid::CdsValueGrid(const CdsContract& contract, double recovery, const CdsGridSpec& spec)
    : maturity_(contract.maturity()), coupon_(contract.coupon()), recovery_(recovery), rate_(contract.rate())
{
    if (spec.nodes_per_period < 2 || spec.n_distances < 3) throw DomainError("CDS grid needs at least 2x3 nodes");
    const double y_max = spec.y_max > 0.0 ? spec.y_max : 9.0 * std::sqrt(maturity_);
    distances_ = distance_nodes(spec.n_distances, y_max);
    for (double y : spec.extra_distances) {
        if (y > 0.0 && y < y_max) distances_.push_back(y);
    }
    std::sort(distances_.begin(), distances_.end());
    distances_.erase(std::unique(distances_.begin(), distances_.end()), distances_.end());
    const auto dates = contract.payment_dates();
    double start = 0.0;
    const auto unit = contract.with_coupon(1.0);
    for (double end : dates) {
        Period p;
        p.start = start;
        p.end = end;
        const int m = spec.nodes_per_period;
        for (int k = 0; k < m; ++k) {
            const double s = static_cast<double>(k) / (m - 1);
            // Graded toward the period end, where the barrier layer is thinnest.
            p.times.push_back(start + (end - start) * (1.0 - (1.0 - s) * (1.0 - s)));
        }
        p.times.back() = end;
        const std::size_t ny = distances_.size();
        p.dl.resize(m * ny);
        p.annuity.resize(m * ny);
        p.riskfree_annuity.resize(m);
        for (int k = 0; k < m; ++k) {
            // Left limit at the period end: the payment at `end` is still outstanding.
            const double t_eval = k == m - 1 ? std::nextafter(end, start) : p.times[k];
            p.riskfree_annuity[k] = 0.0;
            for (std::size_t i = 0; i < dates.size(); ++i) {
                if (dates[i] > t_eval) p.riskfree_annuity[k] += discount_factor(t_eval, dates[i], rate_) * contract.accrual(i);
            }
            for (std::size_t j = 0; j < ny; ++j) {
                const double y = distances_[j];
                p.dl[k * ny + j] = default_leg(y, maturity_ - t_eval, rate_, recovery_);
                p.annuity[k * ny + j] = risky_annuity(unit, t_eval, y);
            }
        }
        periods_.push_back(std::move(p));
        start = end;
    }
}

double CdsValueGrid::node_value(const Period& p, std::size_t it, std::size_t iy) const
{
    const std::size_t idx = it * distances_.size() + iy;
    return p.dl[idx] - coupon_ * p.annuity[idx];
}

double CdsValueGrid::node_slope(const Period& p, std::size_t it, std::size_t j) const
{
    // Fritsch-Butland weighted harmonic mean of the adjacent secants (monotone cubic).
    const auto& y = distances_;
    const std::size_t n = y.size();
    auto secant = [&](std::size_t a) { return (node_value(p, it, a + 1) - node_value(p, it, a)) / (y[a + 1] - y[a]); };
    if (j == 0 || j == n - 1) {
        const std::size_t a = j == 0 ? 0 : n - 2;
        return secant(a);
    }
    const double s0 = secant(j - 1);
    const double s1 = secant(j);
    if (s0 * s1 <= 0.0) return 0.0;
    const double h0 = y[j] - y[j - 1];
    const double h1 = y[j + 1] - y[j];
    const double w0 = 2.0 * h1 + h0;
    const double w1 = h1 + 2.0 * h0;
    return (w0 + w1) / (w0 / s0 + w1 / s1);
}

double CdsValueGrid::at_time_row(const Period& p, std::size_t it, double y) const
{
    if (y >= distances_.back()) return -coupon_ * p.riskfree_annuity[it];
    const std::size_t j = bracket_index(distances_, y);
    const double h = distances_[j + 1] - distances_[j];
    const double s = (y - distances_[j]) / h;
    const double v0 = node_value(p, it, j);
    const double v1 = node_value(p, it, j + 1);
    const double d0 = node_slope(p, it, j) * h;
    const double d1 = node_slope(p, it, j + 1) * h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * v0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * v1 + (s3 - s2) * d1;
}

double CdsValueGrid::value(double t, double y) const
{
    if (y < 0.0) throw DomainError("CDS grid queried below the default barrier");
    if (t >= maturity_) return 0.0;
    if (t < 0.0) throw DomainError("CDS grid queried before inception");
    auto pit = std::upper_bound(periods_.begin(), periods_.end(), t,
                                [](double v, const Period& p) { return v < p.end; });
    const Period& p = *pit;
    const std::size_t i = bracket_index(p.times, t);
    // Cubic Lagrange in sqrt(time to the period end), the variable the barrier layer scales with.
    const std::size_t m = p.times.size();
    std::size_t lo = i > 0 ? i - 1 : 0;
    if (m >= 4) lo = std::min(lo, m - 4);
    const std::size_t hi = std::min(m, lo + 4);
    const double u = std::sqrt(p.end - t);
    double acc = 0.0;
    for (std::size_t a = lo; a < hi; ++a) {
        const double ua = std::sqrt(p.end - p.times[a]);
        double w = 1.0;
        for (std::size_t b = lo; b < hi; ++b) {
            if (b != a) w *= (u - std::sqrt(p.end - p.times[b])) / (ua - std::sqrt(p.end - p.times[b]));
        }
        acc += w * at_time_row(p, a, y);
    }
    return acc;
}

double CdsValueGrid::zero_crossing(double t) const
{
    const double hi = y_max();
    if (value(t, hi) >= 0.0) return hi;
    double lo = 0.0, up = hi;
    for (int k = 0; k < 200 && up - lo > 1e-13 * hi; ++k) {
        const double mid = 0.5 * (lo + up);
        (value(t, mid) > 0.0 ? lo : up) = mid;
    }
    return 0.5 * (lo + up);
}

CdsValueGrid CdsValueGrid::with_coupon(double coupon) const
{
    CdsValueGrid copy = *this;
    copy.coupon_ = coupon;
    return copy;
}

std::vector<double> CdsValueGrid::times() const
{
    std::vector<double> out;
    for (const auto& p : periods_) out.insert(out.end(), p.times.begin(), p.times.end());
    return out;
}

std::vector<double> CdsValueGrid::period_ends() const
{
    std::vector<double> out;
    for (const auto& p : periods_) out.push_back(p.end);
    return out;
}

void CdsValueGrid::write_csv(std::ostream& out) const
{
    char buf[96];
    for (const auto& p : periods_) {
        for (std::size_t i = 0; i < p.times.size(); ++i) {
            for (std::size_t j = 0; j < distances_.size(); ++j) {
                std::snprintf(buf, sizeof buf, "%.11e,%.11e,%.11e\n", p.times[i], distances_[j], node_value(p, i, j));
                out << buf;
            }
        }
    }
}

} // namespace wxva
