#include "wedge_xva/special.hpp"

#include "wedge_xva/errors.hpp"
#include "wedge_xva/quadrature.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace wxva {

namespace {

constexpr int kDebyeTerms = 14;
constexpr double kDebyeMinOrder = 20.0;
constexpr double kHankelMinArg = 25.0;

using Poly = std::vector<double>;  // coefficients in ascending powers of p

// Debye polynomials u_k(p) from u_{k+1} = p^2(1-p^2)/2 u_k' + 1/8 Int_0^p (1-5t^2) u_k(t) dt.
std::array<Poly, kDebyeTerms> make_debye_polynomials()
{
    std::array<Poly, kDebyeTerms> u;
    u[0] = {1.0};
    for (int k = 0; k + 1 < kDebyeTerms; ++k) {
        const Poly& a = u[k];
        Poly next(a.size() + 3, 0.0);
        for (std::size_t j = 1; j < a.size(); ++j) {
            const double d = j * a[j];  // coefficient of p^{j-1} in u_k'
            next[j + 1] += 0.5 * d;
            next[j + 3] -= 0.5 * d;
        }
        for (std::size_t j = 0; j < a.size(); ++j) {
            next[j + 1] += a[j] / (8.0 * (j + 1));
            next[j + 3] -= 5.0 * a[j] / (8.0 * (j + 3));
        }
        u[k + 1] = std::move(next);
    }
    return u;
}

const std::array<Poly, kDebyeTerms>& debye_polynomials()
{
    static const auto polys = make_debye_polynomials();
    return polys;
}

double eval_poly(const Poly& c, double p)
{
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * p + *it;
    return acc;
}

double series_scaled(double nu, double z)
{
    const double q = 0.25 * z * z;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 100000; ++k) {
        term *= q / (k * (nu + k));
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    const double log_pref = nu * std::log(0.5 * z) - std::lgamma(nu + 1.0) - z;
    return std::exp(log_pref + std::log(sum));
}

double hankel_scaled(double nu, double z)
{
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    double prev_abs = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        const double next = -term * (mu - odd * odd) / (k * 8.0 * z);
        if (next == 0.0) break;  // half-integer order: the expansion terminates
        const double a = std::abs(next);
        if (a >= prev_abs) break;  // asymptotic series starts to diverge
        sum += next;
        term = next;
        prev_abs = a;
        if (a < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

double debye_scaled(double nu, double z)
{
    const double t = z / nu;
    const double root = std::sqrt(1.0 + t * t);
    const double p = 1.0 / root;
    // nu*eta - z with eta = sqrt(1+t^2) + ln(t / (1 + sqrt(1+t^2)))
    const double exponent = nu * (1.0 / (root + t)) + nu * std::log(t / (1.0 + root));
    const auto& u = debye_polynomials();
    double sum = 0.0;
    double inv = 1.0;
    for (int k = 0; k < kDebyeTerms; ++k) {
        sum += eval_poly(u[k], p) * inv;
        inv /= nu;
    }
    return std::exp(exponent) * sum / (std::sqrt(2.0 * std::numbers::pi * nu) * std::sqrt(root));
}

// Panel breakpoints 0, w, 2w, 4w, ... up to Z.
std::vector<double> geometric_breaks(double w, double Z)
{
    std::vector<double> breaks{0.0};
    double b = w;
    while (b < Z) {
        breaks.push_back(b);
        b *= 2.0;
    }
    breaks.push_back(Z);
    return breaks;
}

} // namespace

double bessel_i_scaled(double nu, double z)
{
    if (!(nu >= 0.0) || !(z >= 0.0)) throw DomainError("bessel_i_scaled requires nu >= 0 and z >= 0");
    if (z == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    if (nu >= kDebyeMinOrder) return debye_scaled(nu, z);
    if (z >= std::max(kHankelMinArg, 0.5 * nu * nu)) return hankel_scaled(nu, z);
    return series_scaled(nu, z);
}

double jhat_scaled(double p, double Q, const ZetaQuadrature& quad)
{
    if (!(p >= 0.0)) throw DomainError("jhat_scaled requires p >= 0");
    Q = std::abs(Q);
    if (p == 0.0 || Q == 0.0) return 1.0;
    const double Z = std::acosh(1.0 + quad.exponent_cutoff / p) / (2.0 * Q);
    const double width = std::min(0.5, 1.0 / (2.0 * Q * std::sqrt(p)));
    const auto breaks = geometric_breaks(std::min(width, Z), Z);
    const auto rule = composite_gauss_legendre(breaks, quad.points_per_panel);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double zeta = rule.nodes[i];
        acc += rule.weights[i] * std::exp(-p * (std::cosh(2.0 * Q * zeta) - 1.0)) / (zeta * zeta + 0.25);
    }
    return acc / std::numbers::pi;
}

double special_f(double p, double q, const ZetaQuadrature& quad)
{
    if (!(p >= 0.0)) throw DomainError("special_f requires p >= 0");
    q = std::abs(q);
    if (p == 0.0 || q == 0.0) return 0.0;
    const double cq = std::cos(q);
    const double Z = std::acosh(std::max(1.0, quad.exponent_cutoff / p + cq)) / (2.0 * q);
    double inner = 0.0;
    if (Z > 0.0) {
        const double width = std::min(0.5, 1.0 / (2.0 * q * std::sqrt(p)));
        const auto breaks = geometric_breaks(std::min(width, Z), Z);
        const auto rule = composite_gauss_legendre(breaks, quad.points_per_panel);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double zeta = rule.nodes[i];
            inner += rule.weights[i] * -std::expm1(-p * (std::cosh(2.0 * q * zeta) - cq)) / (zeta * zeta + 0.25);
        }
    }
    // Int_Z^inf dzeta / (zeta^2 + 1/4) = 2 atan(1 / 2Z)
    const double tail = Z > 0.0 ? 2.0 * std::atan(1.0 / (2.0 * Z)) : std::numbers::pi;
    return (inner + tail) / std::numbers::pi;
}

double special_h(double p, double q, const ZetaQuadrature& quad)
{
    const double pi = std::numbers::pi;
    auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    const double sp = sign(pi + q);
    const double sm = sign(pi - q);
    double h = 0.0;
    if (sp != 0.0) h += sp * special_f(p, pi + q, quad);
    if (sm != 0.0) h += sm * special_f(p, pi - q, quad);
    return 0.5 * h;
}

} // namespace wxva
