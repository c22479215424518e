#include "wedge_xva/geometry.hpp"

#include "wedge_xva/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

namespace wxva {

namespace {

constexpr double kAngleTol = 1e-12;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

} // namespace

WedgeDomain2D make_wedge_2d(double rho_xy)
{
    if (!(std::abs(rho_xy) < 1.0)) throw CorrelationError("|rho_xy| must be below 1");
    return WedgeDomain2D{std::acos(-rho_xy), rho_xy, std::sqrt(1.0 - rho_xy * rho_xy)};
}

Vec2 transform_2d(double x, double y, double rho_xy)
{
    const double rb = std::sqrt(1.0 - rho_xy * rho_xy);
    return {x, (-rho_xy * x + y) / rb};
}

Vec2 inverse_transform_2d(double alpha, double beta, double rho_xy)
{
    const double rb = std::sqrt(1.0 - rho_xy * rho_xy);
    return {alpha, rho_xy * alpha + rb * beta};
}

Vec2 to_polar_2d(double alpha, double beta, double phi0)
{
    const double r = std::hypot(alpha, beta);
    if (r == 0.0) return {0.0, 0.0};
    const double phi = phi0 + std::atan2(-alpha, beta);
    if (phi < -kAngleTol || phi > phi0 + kAngleTol) throw DomainError("point lies outside the wedge");
    return {r, std::clamp(phi, 0.0, phi0)};
}

Vec2 from_polar_2d(double r, double phi, double phi0)
{
    return {-r * std::sin(phi - phi0), r * std::cos(phi - phi0)};
}

Vec2 polar_from_xy(double x, double y, const WedgeDomain2D& wedge)
{
    if (x < 0.0 || y < 0.0) throw DomainError("state lies outside the positive quadrant");
    const Vec2 ab = transform_2d(x, y, wedge.rho);
    return to_polar_2d(ab[0], ab[1], wedge.phi0);
}

Vec3 transform_3d(double x, double y, double z, const CorrelationTriplet& rho)
{
    const double rb = rho.bar_xy();
    const double alpha = x;
    const double beta = (-rho.xy() * x + y) / rb;
    const double gamma = ((rho.xy() * rho.yz() - rho.xz()) * x + (rho.xy() * rho.xz() - rho.yz()) * y + rb * rb * z) /
                         (rb * rho.chi());
    return {alpha, beta, gamma};
}

Vec3 inverse_transform_3d(double alpha, double beta, double gamma, const CorrelationTriplet& rho)
{
    const double rb = rho.bar_xy();
    const double x = alpha;
    const double y = rho.xy() * alpha + rb * beta;
    const double z = (rb * rho.chi() * gamma - (rho.xy() * rho.yz() - rho.xz()) * x - (rho.xy() * rho.xz() - rho.yz()) * y) /
                     (rb * rb);
    return {x, y, z};
}

Vec3 to_spherical(double alpha, double beta, double gamma)
{
    const double r = std::sqrt(alpha * alpha + beta * beta + gamma * gamma);
    if (r == 0.0) return {0.0, 0.0, 0.0};
    return {r, std::atan2(alpha, beta), std::acos(clamp_unit(gamma / r))};
}

Vec3 from_spherical(double r, double phi, double theta)
{
    const double s = std::sin(theta);
    return {r * s * std::sin(phi), r * s * std::cos(phi), r * std::cos(theta)};
}

AngularDomain::AngularDomain(const CorrelationTriplet& rho) : rho_(rho)
{
    const double rb = rho.bar_xy();
    phi0_ = std::acos(-rho.xy());
    a_ = (rho.yz() - rho.xy() * rho.xz()) / rb;
    b_ = rho.chi() / rb;
    normals_[0] = {1.0, 0.0, 0.0};
    normals_[1] = {rho.xy(), rb, 0.0};
    normals_[2] = {rho.xz(), a_, b_};

    // The omega parametrisation must sweep [0, phi0) monotonically.
    double prev = boundary_curve(0.0).phi;
    for (int k = 1; k <= 400; ++k) {
        const double omega = std::pow(10.0, -4.0 + 10.0 * k / 400.0);
        const double phi = boundary_curve(omega).phi;
        if (!(phi > prev)) {
            throw DomainError("southern boundary parametrisation is not monotone at omega=" + std::to_string(omega));
        }
        prev = phi;
    }
}

double AngularDomain::theta_of_phi(double phi) const
{
    // z = 0 on the sphere: sin(theta) (rho_xz sin(phi) + a cos(phi)) + b cos(theta) = 0.
    const double g = rho_.xz() * std::sin(phi) + a_ * std::cos(phi);
    return std::atan2(b_, -g);
}

double AngularDomain::dtheta_dphi(double phi) const
{
    const double g = rho_.xz() * std::sin(phi) + a_ * std::cos(phi);
    const double dg = rho_.xz() * std::cos(phi) - a_ * std::sin(phi);
    return b_ * dg / (g * g + b_ * b_);
}

double AngularDomain::omega_of_phi(double phi) const
{
    if (phi < 0.0 || phi > phi0_) throw DomainError("phi outside [0, phi0]");
    return std::sin(phi) / std::sin(phi0_ - phi);
}

BoundaryPoint AngularDomain::boundary_curve(double omega) const
{
    if (!(omega >= 0.0)) throw DomainError("boundary_curve requires omega >= 0");
    const double rxy = rho_.xy(), rxz = rho_.xz(), ryz = rho_.yz();
    const double norm = std::sqrt(1.0 - 2.0 * rxy * omega + omega * omega);
    BoundaryPoint bp;
    bp.phi = std::acos(clamp_unit((1.0 - rxy * omega) / norm));
    const double q = (1.0 - rxz * rxz) - 2.0 * omega * (rxy - rxz * ryz) + omega * omega * (1.0 - ryz * ryz);
    const double num = -(ryz - rxz * rxy + omega * (rxz - ryz * rxy));
    bp.theta = std::acos(clamp_unit(num / (rho_.bar_xy() * std::sqrt(q))));
    // omega = sin(phi) / sin(phi0 - phi)  =>  dphi/domega = sin^2(phi0 - phi) / sin(phi0)
    const double s = std::sin(phi0_ - bp.phi);
    bp.dphi_domega = s * s / std::sin(phi0_);
    bp.dtheta_domega = dtheta_dphi(bp.phi) * bp.dphi_domega;
    return bp;
}

double AngularDomain::signed_distance(double phi, double theta) const
{
    const Vec3 p = from_spherical(1.0, phi, theta);
    double d = std::numeric_limits<double>::infinity();
    for (const auto& n : normals_) d = std::min(d, std::asin(clamp_unit(dot(n, p))));
    return -d;
}

bool AngularDomain::contains(double phi, double theta, double tol) const
{
    return phi >= -tol && phi <= phi0_ + tol && theta >= 0.0 && signed_distance(phi, theta) <= tol;
}

Vec3 AngularDomain::spherical_from_xyz(double x, double y, double z) const
{
    if (x < 0.0 || y < 0.0 || z < 0.0) throw DomainError("state lies outside the positive octant");
    const Vec3 abc = transform_3d(x, y, z, rho_);
    Vec3 s = to_spherical(abc[0], abc[1], abc[2]);
    s[1] = std::clamp(s[1], 0.0, phi0_);
    return s;
}

Vec3 AngularDomain::xyz_from_spherical(double r, double phi, double theta) const
{
    const Vec3 abc = from_spherical(r, phi, theta);
    return {dot(normals_[0], abc), dot(normals_[1], abc), dot(normals_[2], abc)};
}

void AngularDomain::write_boundary_csv(std::ostream& out, int n_points) const
{
    char buf[96];
    out << "omega,phi,theta\n";
    for (int k = 0; k < n_points; ++k) {
        // omega = tan(s pi/2) sweeps [0, inf) with even coverage in phi
        const double s = static_cast<double>(k) / n_points;
        const double omega = std::tan(0.5 * std::numbers::pi * s);
        const auto bp = boundary_curve(omega);
        std::snprintf(buf, sizeof buf, "%.11e,%.11e,%.11e\n", omega, bp.phi, bp.theta);
        out << buf;
    }
}

} // namespace wxva
