#pragma once

#include "wedge_xva/model.hpp"

#include <algorithm>
#include <iosfwd>
#include <vector>

namespace wxva {

/// P(x0 + W_s > 0 for all s <= tau) = erf(x0 / sqrt(2 tau)).
double survival_1d(double x0, double tau);

/// First-passage density of x0 + W to zero at time s.
double first_passage_density(double x0, double s);

struct CdsLegs {
    double coupon_leg = 0.0;   // c * sum D S dT, positive
    double default_leg = 0.0;  // (1-R) * Int D f ds
};

/// Legs seen at time t from distance y, over payment dates strictly after t.
CdsLegs cds_legs(const CdsContract& contract, double t, double y, double recovery);
inline CdsLegs cds_legs(const CdsContract& contract, double x0, double recovery)
{
    return cds_legs(contract, 0.0, x0, recovery);
}

/// Unit-coupon risky annuity sum D(t,T_i) S(T_i - t) dT_i over dates after t.
double risky_annuity(const CdsContract& contract, double t, double y);

/// (1-R) Int_0^{T-t} e^{-rate s} f(s) ds by adaptive Gauss-Kronrod on s = u^2.
double default_leg(double y, double horizon, double rate, double recovery);

/// Coupon zeroing the CDS at inception; the contract's own coupon is ignored.
double breakeven_coupon(const CdsContract& contract, double x0, double recovery);

/// sigma such that the breakeven coupon at x0 = initial_value/sigma hits the target.
double calibrate_sigma(double initial_value, double target_spread, double recovery, const CdsContract& contract);

struct CdsGridSpec {
    int nodes_per_period = 10;  // time nodes per coupon period, both ends included
    int n_distances = 200;
    double y_max = 0.0;         // 0 selects 9 sqrt(T)
    std::vector<double> extra_distances;  // merged into the stretched node set
};

/// V^CDS(t, y) = DL - c * annuity from the protection buyer's side.
///
/// Time nodes are laid per coupon period [T_{k-1}, T_k); the node at T_k holds the left
/// limit so interpolation never straddles a payment. Within a row the distance direction
/// uses a monotone cubic; rows are blended by cubic Lagrange in sqrt(T_k - t). Above y_max
/// the value is the risk-free annuity asymptote. Default leg and annuity are stored separately, so a
/// new coupon costs nothing.
class CdsValueGrid {
public:
    CdsValueGrid(const CdsContract& contract, double recovery, const CdsGridSpec& spec = {});

    double value(double t, double y) const;
    double positive_part(double t, double y) const { return std::max(0.0, value(t, y)); }
    double negative_part(double t, double y) const { return std::max(0.0, -value(t, y)); }

    /// Distance at which V(t, .) turns negative (V decreases in y); y_max if it never does.
    double zero_crossing(double t) const;

    CdsValueGrid with_coupon(double coupon) const;

    double coupon() const { return coupon_; }
    double maturity() const { return maturity_; }
    double recovery() const { return recovery_; }
    double rate() const { return rate_; }
    double y_max() const { return distances_.back(); }
    const std::vector<double>& distances() const { return distances_; }
    /// Flattened time nodes (periods concatenated; payment dates appear twice).
    std::vector<double> times() const;
    /// Coupon period boundaries, ending at maturity; V has kinks in time there.
    std::vector<double> period_ends() const;

    void write_csv(std::ostream& out) const;

private:
    struct Period {
        double start;
        double end;
        std::vector<double> times;
        std::vector<double> riskfree_annuity;  // per time node
        std::vector<double> dl;                // times x distances, row-major
        std::vector<double> annuity;
    };

    double node_value(const Period& p, std::size_t it, std::size_t iy) const;
    double node_slope(const Period& p, std::size_t it, std::size_t j) const;
    double at_time_row(const Period& p, std::size_t it, double y) const;

    double maturity_;
    double coupon_;
    double recovery_;
    double rate_;
    std::vector<double> distances_;
    std::vector<Period> periods_;
};

} // namespace wxva
