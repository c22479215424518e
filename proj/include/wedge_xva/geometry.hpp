#pragma once

#include "wedge_xva/model.hpp"

#include <array>
#include <iosfwd>

namespace wxva {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

// ---- 2D wedge ----------------------------------------------------------------

/// Image of the positive quadrant under the decorrelating map: a wedge of angle phi0.
struct WedgeDomain2D {
    double phi0;     // arccos(-rho_xy)
    double rho;
    double rho_bar;  // sqrt(1 - rho^2)
};

WedgeDomain2D make_wedge_2d(double rho_xy);

/// alpha = x, beta = (-rho x + y) / rho_bar.
Vec2 transform_2d(double x, double y, double rho_xy);
Vec2 inverse_transform_2d(double alpha, double beta, double rho_xy);

/// (alpha, beta) = (-r sin(phi - phi0), r cos(phi - phi0)); phi = 0 is {y = 0}, phi = phi0 is {x = 0}.
Vec2 to_polar_2d(double alpha, double beta, double phi0);
Vec2 from_polar_2d(double r, double phi, double phi0);

/// Polar coordinates straight from (x, y): x = r sin(phi0 - phi), y = r sin(phi).
Vec2 polar_from_xy(double x, double y, const WedgeDomain2D& wedge);

// ---- 3D cone -----------------------------------------------------------------

Vec3 transform_3d(double x, double y, double z, const CorrelationTriplet& rho);
Vec3 inverse_transform_3d(double alpha, double beta, double gamma, const CorrelationTriplet& rho);

/// (alpha, beta, gamma) = (r sin(theta) sin(phi), r sin(theta) cos(phi), r cos(theta)).
/// Returns (r, phi, theta) with phi from atan2, no domain check.
Vec3 to_spherical(double alpha, double beta, double gamma);
Vec3 from_spherical(double r, double phi, double theta);

enum class Facet { PhiZero, PhiMax, South };  // x = 0 (PS), y = 0 (RN), z = 0 (PB)

struct BoundaryPoint {
    double phi;
    double theta;
    double dtheta_domega;
    double dphi_domega;
};

/// Spherical triangle cut by {x = 0}, {y = 0}, {z = 0}, in (phi, theta) coordinates.
///
/// x, y and z are dot products of (alpha, beta, gamma) with unit vectors, so each facet is a
/// great circle and the angular distance to it is asin(n . p).
class AngularDomain {
public:
    explicit AngularDomain(const CorrelationTriplet& rho);

    const CorrelationTriplet& correlations() const { return rho_; }
    double phi0() const { return phi0_; }

    /// Southern boundary theta = Theta(phi), in (0, pi).
    double theta_of_phi(double phi) const;
    double dtheta_dphi(double phi) const;

    /// Boundary parametrisation by omega = x / y along z = 0.
    BoundaryPoint boundary_curve(double omega) const;
    double omega_of_phi(double phi) const;

    /// Inward unit normal of a facet in (alpha, beta, gamma).
    const Vec3& normal(Facet f) const { return normals_[static_cast<int>(f)]; }

    /// Negative inside, positive outside; angular distance on the unit sphere.
    double signed_distance(double phi, double theta) const;
    bool contains(double phi, double theta, double tol = 1e-12) const;

    /// (r, phi, theta) of an (x, y, z) state; throws if outside the closed octant.
    Vec3 spherical_from_xyz(double x, double y, double z) const;
    Vec3 xyz_from_spherical(double r, double phi, double theta) const;

    /// Polyline (omega, phi, theta) of the southern boundary.
    void write_boundary_csv(std::ostream& out, int n_points) const;

private:
    CorrelationTriplet rho_;
    double phi0_;
    double a_;  // beta coefficient of z
    double b_;  // gamma coefficient of z
    std::array<Vec3, 3> normals_;
};

} // namespace wxva
