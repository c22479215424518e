#include "wedge_xva/greens2d.hpp"

#include "wedge_xva/errors.hpp"
#include "wedge_xva/geometry.hpp"
#include "wedge_xva/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wxva {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxTerms = 200000;

// Sum_n w(n) e^{-p} I_{n pi / phi0}(p) over n = first, first + step, ... until the Bessel factor
// has entered its super-exponential decay and the bound on the next term is negligible.
template <class Weight>
double bessel_series(double p, double phi0, int first, int step, Weight w)
{
    double sum = 0.0, scale = 0.0;
    int quiet = 0;
    for (int n = first; n < kMaxTerms; n += step) {
        const double nu = n * kPi / phi0;
        const double b = bessel_i_scaled(nu, p);
        const double wn = w(n, nu);
        const double term = wn * b;
        sum += term;
        scale += std::abs(term);
        const double bound = std::abs(wn) * b;
        if (nu * nu > 2.0 * p + 4.0 && (bound <= 1e-15 * scale || b == 0.0)) {
            if (++quiet >= 2) return sum;
        } else {
            quiet = 0;
        }
        if (b == 0.0 && nu * nu > 2.0 * p) return sum;
    }
    throw NumericalError("wedge Bessel series did not converge");
}

void check_kernel_args(double tau, double r, double rp, double phi0)
{
    if (!(tau > 0.0)) throw DomainError("kernel needs tau > 0");
    if (!(r >= 0.0) || !(rp >= 0.0)) throw DomainError("kernel radii must be >= 0");
    if (!(phi0 > 0.0) || phi0 > 2.0 * kPi) throw DomainError("wedge angle must lie in (0, 2 pi]");
}

} // namespace

double green2d_series(double tau, double r, double phi, double rp, double php, double phi0)
{
    check_kernel_args(tau, r, rp, phi0);
    if (phi <= 0.0 || phi >= phi0 || php <= 0.0 || php >= phi0 || r == 0.0 || rp == 0.0) return 0.0;
    const double p = r * rp / tau;
    const double s = bessel_series(p, phi0, 1, 1, [&](int, double nu) { return std::sin(nu * phi) * std::sin(nu * php); });
    return 2.0 / (phi0 * tau) * std::exp(-(r - rp) * (r - rp) / (2.0 * tau)) * s;
}

double green2d_boundary_dphi(double tau, double r, double rp, double php, double phi0, bool upper)
{
    check_kernel_args(tau, r, rp, phi0);
    if (php <= 0.0 || php >= phi0 || r == 0.0 || rp == 0.0) return 0.0;
    const double p = r * rp / tau;
    const double s = bessel_series(p, phi0, 1, 1, [&](int n, double nu) {
        const double edge = upper ? ((n % 2 == 0) ? nu : -nu) : nu;
        return edge * std::sin(nu * php);
    });
    return 2.0 / (phi0 * tau) * std::exp(-(r - rp) * (r - rp) / (2.0 * tau)) * s;
}

double green2d_images(double tau, double r, double phi, double rp, double php, double phi0, const ImageSumParams& params)
{
    check_kernel_args(tau, r, rp, phi0);
    if (phi <= 0.0 || phi >= phi0 || php <= 0.0 || php >= phi0 || r == 0.0 || rp == 0.0) return 0.0;
    const double p = r * rp / tau;
    const double far = std::exp(-(r + rp) * (r + rp) / (2.0 * tau));
    auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    // 4 pi tau times the non-periodic kernel at angular offset d.
    auto free_kernel = [&](double d) {
        const double sp = sign(kPi + d), sm = sign(kPi - d);
        double v = 0.0;
        if (sp + sm != 0.0) v += (sp + sm) * std::exp(-(r * r + rp * rp - 2.0 * std::cos(d) * r * rp) / (2.0 * tau));
        if (sp != 0.0) v -= sp * far * jhat_scaled(p, kPi + d, params.quad);
        if (sm != 0.0) v -= sm * far * jhat_scaled(p, kPi - d, params.quad);
        return v;
    };
    auto image_pair = [&](int n) {
        return free_kernel(phi - php - 2.0 * n * phi0) - free_kernel(phi + php - 2.0 * n * phi0);
    };

    double sum = image_pair(0);
    // Far below the Gaussian envelope the sum cancels to a tiny value; measure convergence
    // against a small fraction of the envelope there rather than against the value itself.
    const double floor = 1e-6 * std::exp(-(r - rp) * (r - rp) / (2.0 * tau));
    // Past |offset| > pi the pair contributions decay algebraically, like n^-k. The tail is
    // estimated from the fitted power, sum_{m>n} m^-k ~ (n + 1/2)^{1-k} / (k - 1), and its
    // own error is taken as |tail| / n.
    double prev = 0.0;
    int quiet = 0;
    for (int n = 1; n <= params.n_max; ++n) {
        const double add = image_pair(n) + image_pair(-n);
        sum += add;
        const bool past = 2.0 * n * phi0 - 2.0 * phi0 > kPi;
        double tail = 0.0, error = std::abs(add) * n;
        if (past && n > 2 && add != 0.0 && prev != 0.0 && (add > 0) == (prev > 0) && std::abs(add) < std::abs(prev)) {
            const double k = std::log(prev / add) / std::log(double(n) / (n - 1));
            if (k > 1.5) {
                tail = add * std::pow(double(n), k) / ((k - 1.0) * std::pow(n + 0.5, k - 1.0));
                error = std::abs(tail) / n;
            }
        }
        prev = add;
        if (past && (add == 0.0 || error <= params.rel_tol * std::max(std::abs(sum + tail), floor))) {
            if (++quiet >= 3) return (sum + tail) / (4.0 * kPi * tau);
        } else {
            quiet = 0;
        }
    }
    throw NumericalError("image sum did not converge within n_max pairs");
}

double survival_2d(double t, double x0, double y0, double rho, double T)
{
    if (!(x0 > 0.0) || !(y0 > 0.0)) throw DomainError("survival_2d needs x0, y0 > 0");
    if (!(std::abs(rho) < 1.0)) throw DomainError("survival_2d needs |rho| < 1");
    if (!(T > t)) throw DomainError("survival_2d needs T > t");
    const double tau = T - t;
    const auto wedge = make_wedge_2d(rho);
    const auto pol = polar_from_xy(x0, y0, wedge);
    const double rp = pol[0], php = pol[1], phi0 = wedge.phi0;

    auto integrand = [&](double r) {
        if (r <= 0.0) return 0.0;
        const double p = r * rp / tau;
        const double s = bessel_series(p, phi0, 1, 2, [&](int n, double nu) { return std::sin(nu * php) / n; });
        return std::exp(-(r - rp) * (r - rp) / (2.0 * tau)) / tau * s * r;
    };
    const double cut = 9.0 * std::sqrt(tau);
    const double a = std::max(0.0, rp - cut), b = rp + cut;
    const auto res = adaptive_gauss_kronrod(integrand, a, b, 1e-13);
    if (!res.converged) throw NumericalError("survival_2d radial quadrature did not converge");
    return std::clamp(4.0 / kPi * res.value, 0.0, 1.0);
}

double boundary_adjustment_2d(double t, double xc0, double y0, double rho, double recovery_c, const CdsValueGrid& grid,
                              bool positive, const BoundaryQuadrature& quad)
{
    if (!(xc0 > 0.0) || !(y0 > 0.0)) throw DomainError("boundary adjustment needs positive distances");
    if (!(std::abs(rho) < 1.0)) throw DomainError("boundary adjustment needs |rho| < 1");
    if (!(recovery_c >= 0.0 && recovery_c <= 1.0)) throw DomainError("recovery must lie in [0, 1]");
    const double T = grid.maturity();
    if (t >= T || recovery_c == 1.0) return 0.0;

    const auto wedge = make_wedge_2d(rho);
    const auto pol = polar_from_xy(xc0, y0, wedge);
    const double rp = pol[0], php = pol[1], phi0 = wedge.phi0, rho_bar = wedge.rho_bar;
    const double rate = grid.rate();

    auto radial = [&](double tp) {
        const double tau = tp - t;
        const double cut = quad.gaussian_cut * std::sqrt(tau);
        double a = std::max(0.0, rp - cut), b = rp + cut;
        const double rstar = grid.zero_crossing(tp) / rho_bar;
        if (positive) b = std::min(b, rstar);
        else a = std::max(a, rstar);
        if (!(b > a)) return 0.0;
        double acc = 0.0;
        const auto& gl = gauss_legendre(quad.radial_points);
        for (int k = 0; k < quad.radial_panels; ++k) {
            const double lo = a + (b - a) * k / quad.radial_panels;
            const double hi = a + (b - a) * (k + 1) / quad.radial_panels;
            for (std::size_t i = 0; i < gl.size(); ++i) {
                const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[i];
                const double v = positive ? grid.positive_part(tp, rho_bar * r) : grid.negative_part(tp, rho_bar * r);
                if (v == 0.0) continue;
                acc += 0.5 * (hi - lo) * gl.weights[i] * green2d_boundary_dphi(tau, r, rp, php, phi0, true) * v / r;
            }
        }
        return acc;
    };

    // Time panels: geometric from the first time the boundary is reachable, then payment dates.
    const double tau_min = xc0 * xc0 / 90.0;
    if (t + tau_min >= T) return 0.0;
    std::vector<double> breaks{t + tau_min};
    double first_date = T;
    for (double d : grid.period_ends()) {
        if (d > t + tau_min) {
            first_date = std::min(first_date, d);
            break;
        }
    }
    for (double s = 2.0 * tau_min; t + s < first_date; s *= 2.0) breaks.push_back(t + s);
    for (double d : grid.period_ends()) {
        if (d > breaks.back() + 1e-12 && d < T) breaks.push_back(d);
    }
    breaks.push_back(T);

    double total = 0.0;
    const auto& gl = gauss_legendre(quad.time_points);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double lo = breaks[k], hi = breaks[k + 1];
        for (std::size_t i = 0; i < gl.size(); ++i) {
            const double tp = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[i];
            total += 0.5 * (hi - lo) * gl.weights[i] * std::exp(-rate * (tp - t)) * radial(tp);
        }
    }
    return -0.5 * (1.0 - recovery_c) * total;
}

double cva_2d(double t, const IssuerParams& ps, const IssuerParams& rn, double rho_xy, const CdsValueGrid& grid,
              const BoundaryQuadrature& quad)
{
    return boundary_adjustment_2d(t, ps.x0(), rn.x0(), rho_xy, ps.recovery, grid, true, quad);
}

double dva_2d(double t, const IssuerParams& pb, const IssuerParams& rn, double rho_yz, const CdsValueGrid& grid,
              const BoundaryQuadrature& quad)
{
    return boundary_adjustment_2d(t, pb.x0(), rn.x0(), rho_yz, pb.recovery, grid, false, quad);
}

} // namespace wxva
