#include "wedge_xva/quadrature.hpp"

#include "wedge_xva/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace wxva {

namespace {

QuadratureRule compute_gauss_legendre(int n)
{
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

} // namespace

const QuadratureRule& gauss_legendre(int n)
{
    if (n < 1) throw DomainError("Gauss-Legendre rule needs at least one node");
    static std::mutex mutex;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

QuadratureRule gauss_legendre(int n, double a, double b)
{
    QuadratureRule rule;
    append_gauss_legendre(rule, n, a, b);
    return rule;
}

void append_gauss_legendre(QuadratureRule& rule, int n, double a, double b)
{
    const auto& ref = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < n; ++i) {
        rule.nodes.push_back(mid + half * ref.nodes[i]);
        rule.weights.push_back(half * ref.weights[i]);
    }
}

QuadratureRule composite_gauss_legendre(std::span<const double> breaks, int n)
{
    QuadratureRule rule;
    for (std::size_t i = 1; i < breaks.size(); ++i) {
        if (breaks[i] > breaks[i - 1]) append_gauss_legendre(rule, n, breaks[i - 1], breaks[i]);
    }
    return rule;
}

namespace {

// Kronrod nodes on [0, 1] for the 15-point rule; odd entries are the Gauss 7-point nodes.
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

void gk15(const std::function<double(double)>& f, double a, double b, double& k, double& err)
{
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const double fc = f(mid);
    double rk = fc * kWgk[7];
    double rg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double s = f(mid - dx) + f(mid + dx);
        rk += kWgk[j] * s;
        if (j % 2 == 1) rg += kWg[j / 2] * s;
    }
    k = rk * half;
    err = std::abs((rk - rg) * half);
}

void adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth, AdaptiveResult& out)
{
    double k = 0.0, err = 0.0;
    gk15(f, a, b, k, err);
    if (err <= tol || depth <= 0) {
        if (err > tol) out.converged = false;
        out.value += k;
        out.error += err;
        return;
    }
    const double m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1, out);
    adapt(f, m, b, 0.5 * tol, depth - 1, out);
}

} // namespace

AdaptiveResult adaptive_gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                                      double abs_tol, int max_depth)
{
    AdaptiveResult out;
    if (b > a) adapt(f, a, b, abs_tol, max_depth, out);
    return out;
}

} // namespace wxva
