#include "wedge_xva/model.hpp"

#include "wedge_xva/errors.hpp"

#include <cmath>

namespace wxva {

std::string_view to_string(Role role)
{
    switch (role) {
    case Role::ProtectionSeller: return "PS";
    case Role::ReferenceName: return "RN";
    case Role::ProtectionBuyer: return "PB";
    }
    return "?";
}

Role role_from_string(std::string_view name)
{
    if (name == "PS" || name == "protection_seller") return Role::ProtectionSeller;
    if (name == "RN" || name == "reference_name") return Role::ReferenceName;
    if (name == "PB" || name == "protection_buyer") return Role::ProtectionBuyer;
    throw DomainError("unknown issuer role '" + std::string(name) + "'");
}

double IssuerParams::x0() const { return distance_from_inputs(ln_distance, sigma); }

IssuerParams make_issuer(Role role, double ln_distance, double sigma, double recovery, std::string name)
{
    if (!(sigma > 0.0)) throw DomainError("issuer volatility must be positive");
    if (!(recovery >= 0.0 && recovery < 1.0)) throw DomainError("issuer recovery must lie in [0, 1)");
    if (!(ln_distance > 0.0)) throw DomainError("issuer must be alive at t=0 (ln_distance > 0)");
    return IssuerParams{role, ln_distance, sigma, recovery, std::move(name)};
}

CorrelationTriplet::CorrelationTriplet(double rho_xy, double rho_xz, double rho_yz)
    : xy_(rho_xy), xz_(rho_xz), yz_(rho_yz), chi_(0.0)
{
    for (double r : {rho_xy, rho_xz, rho_yz}) {
        if (!(std::abs(r) < 1.0)) throw CorrelationError("each correlation must satisfy |rho| < 1");
    }
    const double chi2 = 1.0 - rho_xy * rho_xy - rho_xz * rho_xz - rho_yz * rho_yz + 2.0 * rho_xy * rho_xz * rho_yz;
    if (!(chi2 > 0.0)) {
        throw CorrelationError("correlation matrix is not positive definite (chi^2 = " + std::to_string(chi2) + ")");
    }
    chi_ = std::sqrt(chi2);
}

double CorrelationTriplet::bar_xy() const { return std::sqrt(1.0 - xy_ * xy_); }
double CorrelationTriplet::bar_xz() const { return std::sqrt(1.0 - xz_ * xz_); }
double CorrelationTriplet::bar_yz() const { return std::sqrt(1.0 - yz_ * yz_); }

CorrelationTriplet validate_correlations(double rho_xy, double rho_xz, double rho_yz)
{
    return CorrelationTriplet(rho_xy, rho_xz, rho_yz);
}

CdsContract::CdsContract(double maturity, double coupon, std::vector<double> payment_dates, double rate)
    : maturity_(maturity), coupon_(coupon), dates_(std::move(payment_dates)), rate_(rate)
{
    if (dates_.empty()) throw DomainError("CDS schedule has no payment dates");
    double prev = 0.0;
    for (double d : dates_) {
        if (!(d > prev)) throw DomainError("CDS payment dates must be strictly increasing and positive");
        prev = d;
    }
    if (std::abs(dates_.back() - maturity_) > 1e-12) throw DomainError("last payment date must equal maturity");
}

CdsContract CdsContract::with_frequency(double maturity, double coupon, int frequency, double rate)
{
    if (!(maturity > 0.0)) throw DomainError("maturity must be positive");
    if (frequency < 1) throw DomainError("payment frequency must be at least 1 per year");
    const double step = 1.0 / frequency;
    std::vector<double> dates;
    // Anchor on maturity, walk backwards; a remainder below 1e-9 years is absorbed.
    for (int k = 0;; ++k) {
        const double d = maturity - k * step;
        if (d <= 1e-9) break;
        dates.push_back(d);
    }
    std::vector<double> asc(dates.rbegin(), dates.rend());
    asc.back() = maturity;
    return CdsContract(maturity, coupon, std::move(asc), rate);
}

double CdsContract::accrual(std::size_t i) const
{
    return i == 0 ? dates_[0] : dates_[i] - dates_[i - 1];
}

CdsContract CdsContract::with_coupon(double coupon) const
{
    CdsContract copy = *this;
    copy.coupon_ = coupon;
    return copy;
}

InitialState make_initial_state(double x0, double y0, double z0)
{
    if (!(x0 > 0.0 && y0 > 0.0 && z0 > 0.0)) throw DomainError("initial distances must be strictly positive");
    return InitialState{x0, y0, z0};
}

double discount_factor(double t, double T, double rate)
{
    if (t > T) throw DomainError("discount_factor requires t <= T");
    return std::exp(-rate * (T - t));
}

double distance_from_inputs(double initial_value, double sigma)
{
    if (!(initial_value > 0.0) || !(sigma > 0.0)) {
        throw DomainError("initial value and volatility must be positive");
    }
    return initial_value / sigma;
}

} // namespace wxva
