#pragma once

#include "wedge_xva/analytic1d.hpp"
#include "wedge_xva/fem.hpp"
#include "wedge_xva/geometry.hpp"

#include <functional>
#include <span>

namespace wxva {

/// e^{-(r^2+r'^2)/2tau} / (tau sqrt(r r')) I_nu(r r'/tau) with nu = sqrt(lambda2 + 1/4).
double radial_kernel(double tau, double r, double rp, double lambda2);

struct SeriesValue {
    double value = 0.0;
    double tail = 0.0;  // |contribution of the last five modes|
};

struct Green3dOptions {
    bool strict = false;      // throw when the tail exceeds tail_tol relative to the value
    double tail_tol = 1e-6;
};

/// Cone heat kernel, density w.r.t. r^2 sin(theta) dr dphi dtheta. Points are (r, phi, theta).
SeriesValue green3d(double tau, const Vec3& x, const Vec3& xp, const EigenBasis& basis,
                    const Green3dOptions& options = {});

struct ConeQuadrature {
    int time_points = 8;        // Gauss-Legendre points per time panel
    int chebyshev_points = 40;  // radial interpolation of the mode sum along each ray
    int radial_panels = 4;      // per piece of the radial window on either side of a kink
    int radial_points = 12;
    double gaussian_cut = 9.0;  // radial window r' +- cut sqrt(tau)
    // Exits before tau_c = short_time_factor r'^2 / Lambda_N^2 use the two-facet wedge kernel
    // instead of the truncated mode sum.
    double short_time_factor = 20.0;
    int short_radial_panels = 8;
    int short_radial_points = 8;
    int free_panels = 12;       // Gauss-Legendre panels over the free coordinate's normal score
    int free_points = 8;
    int threads = 1;
};

/// P(all three names survive to T) from the state at t. Horizons within four switch times of the
/// exit kernel are computed as one minus the exit probability, where the mode sum is unresolved.
double survival_3d(double t, const InitialState& state, const AngularDomain& domain, double T,
                   const EigenBasis& basis, const ConeQuadrature& quad = {});

/// Dirichlet data of a cone problem. Facet functions take (t', x, y, z) on the facet; an empty
/// function means zero data. `radial_break` returns the radius at which the data has a kink along
/// the ray through a unit boundary point, or a non-positive value if there is none.
struct BoundaryData {
    std::array<std::function<double(double tp, const Vec3& xyz)>, 3> facet;
    std::function<double(double tp, const Vec3& unit)> radial_break;
};

/// First-exit density of the cone from one starting point, tabulated on a time grid and along
/// the rays through the Dirichlet nodes of the mesh. Payoff independent, so a single table
/// prices every coupon of a contract.
///
/// The angular part uses the consistent nodal flux (K - Lambda^2 M) Psi rather than pointwise
/// derivatives; nodes on two facets split their flux evenly between them.
///
/// The mode sum cannot resolve the exit density while the diffusion has spread less than the
/// shortest wavelength of the basis. Before tau_c the exit through a facet is instead taken from
/// the exact wedge kernel of that facet and the nearer of the other two, with the remaining
/// coordinate Gaussian given the pair; only the farthest facet is ignored there, which costs at
/// most erfc(d / sqrt(2 tau_c)) for its distance d (see neglected_bound()).
class ConeExitKernel {
public:
    /// `kinks` are extra time breaks (payment dates) in (t, T).
    ConeExitKernel(double t, double T, std::span<const double> kinks, const InitialState& state,
                   const AngularDomain& domain, const EigenBasis& basis, const ConeQuadrature& quad = {});

    /// int_t^T int_0^inf sum over facets e^{-rate (t' - t)} data(t', X) P(exit at X at t') dr dt'.
    double integrate(const BoundaryData& data, double rate) const;

    /// Time nodes of the mode-sum part (after tau_c).
    const std::vector<double>& times() const { return times_; }
    /// Time nodes of the short-time wedge part.
    const std::vector<double>& short_times() const { return short_times_; }
    double start() const { return t_; }
    double horizon() const { return T_; }
    double switch_time() const { return tau_c_; }
    double neglected_bound() const { return neglected_; }

private:
    struct Slice {
        double tp, weight, a, b;
        Eigen::MatrixXd values;  // chebyshev_points x boundary nodes
    };
    // One (t', r) node of the short-time part of a facet: exit weight and the free coordinate's law.
    struct WedgeNode {
        double tp, weight, wall, free_mean, free_sd;
    };
    struct ShortPart {
        int exit = 0, wall = 0, free = 0;  // coordinate indices into (x, y, z)
        std::vector<WedgeNode> nodes;
    };

    double slice_integral(const Slice& s, const BoundaryData& data) const;
    double short_integral(const ShortPart& part, const BoundaryData& data, double rate) const;
    void build_short_parts(double t, double tau_min, const double* d, const CorrelationTriplet& rho);

    double t_, T_, rp_;
    ConeQuadrature quad_;
    std::vector<double> times_;
    std::vector<Slice> slices_;
    std::vector<Vec3> unit_;                       // (x, y, z) of each boundary node at r = 1
    std::vector<std::array<double, 3>> share_;     // facet weights per boundary node
    double tau_c_ = 0.0, neglected_ = 0.0;
    std::vector<double> short_times_;
    std::array<ShortPart, 3> short_;
};

/// E[ e^{-rate (tau - t)} data(tau, X_tau); tau <= T ] + E[ e^{-rate (T - t)} terminal(X_T); T < tau ]
/// for the cone exit time tau. Either part may be left empty.
double boundary_value_price(double t, double T, double rate, const InitialState& state, const AngularDomain& domain,
                            const EigenBasis& basis, const BoundaryData& data,
                            const std::function<double(const Vec3& xyz)>& terminal = {},
                            const ConeQuadrature& quad = {});

/// The three obligors of a CDS trade: seller x, reference name y, buyer z.
struct TradeParties {
    IssuerParams seller;
    IssuerParams reference;
    IssuerParams buyer;

    InitialState state() const;
};

/// CVA: seller defaults first, before T, while the CDS is worth V+ to the buyer.
double cva_3d(double t, const TradeParties& parties, const AngularDomain& domain, const EigenBasis& basis,
              const CdsValueGrid& grid, const ConeQuadrature& quad = {});

/// DVA: buyer defaults first, before T, while the CDS is worth V- to the seller.
double dva_3d(double t, const TradeParties& parties, const AngularDomain& domain, const EigenBasis& basis,
              const CdsValueGrid& grid, const ConeQuadrature& quad = {});

enum class AdjustmentMode { Standard, CvaOnly, DvaOnly, Bilateral };

std::string_view to_string(AdjustmentMode mode);

/// Inception pricing of one contract: the exit kernel is built once and reused for every coupon.
class AdjustmentEngine {
public:
    AdjustmentEngine(const CdsContract& contract, const TradeParties& parties, const AngularDomain& domain,
                     const EigenBasis& basis, const ConeQuadrature& quad = {}, const CdsGridSpec& grid_spec = {});

    double cds_value(double coupon) const;
    /// First-to-default adjustments with all three names risky.
    double cva(double coupon) const;
    double dva(double coupon) const;
    /// One risky counterparty, the other never defaults: the two-name wedge adjustments.
    double unilateral_cva(double coupon) const;
    double unilateral_dva(double coupon) const;

    /// Secant root in c (to 1e-8) of V - unilateral CVA (CvaOnly), V + unilateral DVA (DvaOnly)
    /// or V - CVA + DVA (Bilateral).
    double breakeven(AdjustmentMode mode) const;

private:
    double adjustment(double coupon, bool cva_side) const;

    CdsContract contract_;
    TradeParties parties_;
    CorrelationTriplet rho_;
    CdsValueGrid grid_;
    ConeExitKernel kernel_;
};

double breakeven_adjusted(const CdsContract& contract, const TradeParties& parties, const AngularDomain& domain,
                          const EigenBasis& basis, AdjustmentMode mode, const ConeQuadrature& quad = {});

} // namespace wxva
