#pragma once

#include "wedge_xva/analytic1d.hpp"
#include "wedge_xva/model.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace wxva {

/// Philox4x32-10 block cipher.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

struct SimConfig {
    std::int64_t n_paths = 1000000;
    int steps_per_year = 250;
    std::uint64_t seed = 20111215;
    bool bridge_correction = true;
    bool antithetic = false;
    int threads = 1;

    void validate() const;
};

struct EstimateWithError {
    double value = 0.0;
    double standard_error = 0.0;
    std::int64_t n_effective = 0;
};

/// Simulated default times (capped at T for survivors) and the reference name's distance at the
/// seller's and the buyer's default.
struct PathSet {
    double horizon = 0.0;
    bool antithetic = false;
    std::vector<std::array<double, 3>> tau;   // x, y, z
    std::vector<std::array<bool, 3>> defaulted;
    std::vector<double> y_at_seller;          // y at tau_x, or 0 if x survives
    std::vector<double> y_at_buyer;           // y at tau_z, or 0 if z survives

    std::size_t size() const { return tau.size(); }
};

/// Euler paths of the correlated driftless motions, absorbed at zero. With the bridge correction
/// a step also kills a coordinate with probability exp(-2 x_k x_{k+1} / dt). A crossing inside a
/// step is placed at a uniform time within it, which also orders simultaneous defaults.
PathSet simulate_default_times(const InitialState& state, const CorrelationTriplet& rho, double T, const SimConfig& config);

enum class SurvivalSet { Joint, SellerReference, SellerBuyer, ReferenceBuyer, Seller, Reference, Buyer };

EstimateWithError estimate_survival(const PathSet& paths, SurvivalSet set, double horizon);

enum class McMode { UnilateralCva, UnilateralDva, Bilateral };

struct AdjustmentEstimate {
    EstimateWithError cva;
    EstimateWithError dva;
};

/// Pathwise (1 - R) D V+- at first default. Bilateral: seller (buyer) must default before the
/// reference name, the other party and T. Unilateral modes ignore the other party entirely.
AdjustmentEstimate estimate_cva_dva(const PathSet& paths, const CdsValueGrid& grid, double seller_recovery,
                                    double buyer_recovery, McMode mode);

enum class McBreakevenMode { Standard, CvaOnly, DvaOnly, Bilateral };

/// Root of V(c) - CVA(c) + DVA(c) on fixed paths (common random numbers), with the standard
/// error of the adjustment term mapped through the slope. Standard mode estimates the default
/// leg and annuity from the paths.
EstimateWithError estimate_breakeven(const PathSet& paths, const CdsContract& contract,
                                     double reference_recovery, double seller_recovery, double buyer_recovery,
                                     McBreakevenMode mode);

} // namespace wxva
