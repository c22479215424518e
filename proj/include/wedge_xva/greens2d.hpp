#pragma once

#include "wedge_xva/analytic1d.hpp"
#include "wedge_xva/model.hpp"
#include "wedge_xva/special.hpp"

namespace wxva {

/// Controls for the method-of-images sum.
struct ImageSumParams {
    int n_max = 20000;          // image pairs before giving up
    double rel_tol = 1e-13;     // stop once a +-n image pair adds less than this, relatively
    ZetaQuadrature quad{};
};

/// Wedge heat kernel (generator half the Laplacian, absorbing at phi = 0 and phi = phi0) by the
/// Bessel eigen-expansion. Density with respect to r dr dphi.
double green2d_series(double tau, double r, double phi, double rp, double php, double phi0);

/// Same kernel by images of the non-periodic fundamental solution.
double green2d_images(double tau, double r, double phi, double rp, double php, double phi0,
                      const ImageSumParams& params = {});

/// dG/dphi at phi = phi0 (upper = true) or phi = 0, term-wise from the series.
double green2d_boundary_dphi(double tau, double r, double rp, double php, double phi0, bool upper);

/// P(both names survive to T) for x0, y0 > 0 starting at t.
double survival_2d(double t, double x0, double y0, double rho, double T);

struct BoundaryQuadrature {
    int time_points = 8;         // Gauss-Legendre points per time panel
    int radial_panels = 12;
    int radial_points = 10;
    double gaussian_cut = 9.0;   // radial window r' +- cut sqrt(tau)
};

/// (1 - R_c) E[ e^{-r (tau_c - t)} payoff(tau_c, y_{tau_c}) ; tau_c < min(tau_y, T) ] for a
/// counterparty c at distance xc0 whose default boundary is x = 0, correlated rho with the
/// reference name y. `payoff` must be supported on one side of a single crossing in y:
/// `positive` selects V+ (support below the crossing) or V- (support above).
double boundary_adjustment_2d(double t, double xc0, double y0, double rho, double recovery_c,
                              const CdsValueGrid& grid, bool positive,
                              const BoundaryQuadrature& quad = {});

/// CVA with a risk-free protection buyer; the grid values the CDS on the reference name.
double cva_2d(double t, const IssuerParams& ps, const IssuerParams& rn, double rho_xy, const CdsValueGrid& grid,
              const BoundaryQuadrature& quad = {});

/// DVA with a risk-free protection seller: protection buyer z defaults first while V < 0.
double dva_2d(double t, const IssuerParams& pb, const IssuerParams& rn, double rho_yz, const CdsValueGrid& grid,
              const BoundaryQuadrature& quad = {});

} // namespace wxva
