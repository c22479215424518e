#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wxva {

enum class Role { ProtectionSeller, ReferenceName, ProtectionBuyer };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

/// One obligor. `ln_distance` is ln(a0/l0); the model coordinate is ln_distance/sigma.
struct IssuerParams {
    Role role = Role::ReferenceName;
    double ln_distance = 0.0;
    double sigma = 0.0;
    double recovery = 0.0;
    std::string name;

    double x0() const;
};

IssuerParams make_issuer(Role role, double ln_distance, double sigma, double recovery, std::string name = {});

/// Validated (rho_xy, rho_xz, rho_yz) with chi = sqrt(det C).
class CorrelationTriplet {
public:
    CorrelationTriplet() : CorrelationTriplet(0.0, 0.0, 0.0) {}
    CorrelationTriplet(double rho_xy, double rho_xz, double rho_yz);

    double xy() const { return xy_; }
    double xz() const { return xz_; }
    double yz() const { return yz_; }
    double chi() const { return chi_; }
    double bar_xy() const;
    double bar_xz() const;
    double bar_yz() const;

    bool operator==(const CorrelationTriplet&) const = default;

private:
    double xy_, xz_, yz_, chi_;
};

CorrelationTriplet validate_correlations(double rho_xy, double rho_xz, double rho_yz);

/// Fixed-coupon CDS with a discrete payment schedule and a flat continuously compounded rate.
class CdsContract {
public:
    CdsContract(double maturity, double coupon, std::vector<double> payment_dates, double rate);

    /// Schedule anchored at maturity with `frequency` payments per year; a short front stub if needed.
    static CdsContract with_frequency(double maturity, double coupon, int frequency, double rate);

    double maturity() const { return maturity_; }
    double coupon() const { return coupon_; }
    double rate() const { return rate_; }
    std::span<const double> payment_dates() const { return dates_; }
    double accrual(std::size_t i) const;

    CdsContract with_coupon(double coupon) const;

private:
    double maturity_;
    double coupon_;
    std::vector<double> dates_;
    double rate_;
};

struct InitialState {
    double x0;  // protection seller
    double y0;  // reference name
    double z0;  // protection buyer
};

InitialState make_initial_state(double x0, double y0, double z0);

double discount_factor(double t, double T, double rate);
double distance_from_inputs(double initial_value, double sigma);

} // namespace wxva
