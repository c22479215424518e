#include "wedge_xva/greens3d.hpp"

#include "wedge_xva/errors.hpp"
#include "wedge_xva/greens2d.hpp"
#include "wedge_xva/quadrature.hpp"
#include "wedge_xva/special.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

namespace wxva {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd bessel_orders(const EigenBasis& basis)
{
    return (basis.eigenvalues().array() + 0.25).sqrt();
}

// radial_kernel without its Gaussian factor e^{-(r - r')^2 / 2 tau}, for every mode.
void unscaled_radial(double tau, double r, double rp, const Eigen::VectorXd& nu, double* out)
{
    const Eigen::Index n = nu.size();
    if (r == 0.0 || rp == 0.0) {
        for (Eigen::Index k = 0; k < n; ++k) out[k] = nu(k) == 0.5 ? 2.0 / (tau * std::sqrt(2.0 * kPi * tau)) : 0.0;
        return;
    }
    const double p = r * rp / tau, pre = 1.0 / (tau * std::sqrt(r * rp));
    for (Eigen::Index k = 0; k < n; ++k) {
        // Orders are increasing, so once the scaled Bessel underflows the rest do too.
        const double b = bessel_i_scaled(nu(k), p);
        out[k] = pre * b;
        if (b == 0.0) {
            std::fill(out + k + 1, out + n, 0.0);
            return;
        }
    }
}

Vec3 state_spherical(const InitialState& s, const AngularDomain& domain)
{
    if (!(s.x0 > 0.0) || !(s.y0 > 0.0) || !(s.z0 > 0.0)) throw DomainError("state must lie strictly inside the octant");
    return domain.spherical_from_xyz(s.x0, s.y0, s.z0);
}

// Runs body(i) for i in [0, n) over up to `threads` workers; the first exception is rethrown.
template <class Body>
void parallel_for(int n, int threads, Body body)
{
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::mutex guard;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += threads) body(i);
            } catch (...) {
                std::lock_guard lock(guard);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct Chebyshev {
    double a, b;
    std::vector<double> nodes, weights;

    Chebyshev(double lo, double hi, int n) : a(lo), b(hi), nodes(n), weights(n)
    {
        for (int k = 0; k < n; ++k) {
            nodes[k] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(kPi * k / (n - 1));
            weights[k] = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
        }
    }

    // Barycentric coefficients at x.
    void coefficients(double x, std::vector<double>& c) const
    {
        c.assign(nodes.size(), 0.0);
        double den = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const double d = x - nodes[k];
            if (d == 0.0) {
                std::fill(c.begin(), c.end(), 0.0);
                c[k] = 1.0;
                return;
            }
            c[k] = weights[k] / d;
            den += c[k];
        }
        for (auto& v : c) v /= den;
    }
};

// Gauss-Legendre panels on [t + tau_min, T]: geometric up to the first kink, then kink to kink.
QuadratureRule time_rule(double t, double T, double tau_min, std::span<const double> kinks, int points)
{
    QuadratureRule rule;
    if (t + tau_min >= T) return rule;
    std::vector<double> inner;
    for (double d : kinks) {
        if (d > t + tau_min && d < T) inner.push_back(d);
    }
    std::sort(inner.begin(), inner.end());
    const double first = inner.empty() ? T : inner.front();
    std::vector<double> breaks{t + tau_min};
    for (double s = 2.0 * tau_min; t + s < first; s *= 2.0) breaks.push_back(t + s);
    for (double d : inner) {
        if (d > breaks.back() + 1e-12) breaks.push_back(d);
    }
    if (T > breaks.back() + 1e-12) breaks.push_back(T);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) append_gauss_legendre(rule, points, breaks[k], breaks[k + 1]);
    return rule;
}

// Radial Gauss-Legendre over the Gaussian window of tau.
QuadratureRule radial_rule(double tau, double rp, const ConeQuadrature& quad, int panels)
{
    const double cut = quad.gaussian_cut * std::sqrt(tau);
    const double a = std::max(0.0, rp - cut), b = rp + cut;
    QuadratureRule rule;
    for (int k = 0; k < panels; ++k) {
        append_gauss_legendre(rule, quad.radial_points, a + (b - a) * k / panels, a + (b - a) * (k + 1) / panels);
    }
    return rule;
}

} // namespace

double radial_kernel(double tau, double r, double rp, double lambda2)
{
    if (!(tau > 0.0)) throw DomainError("radial kernel needs tau > 0");
    if (!(r >= 0.0) || !(rp >= 0.0)) throw DomainError("radial kernel needs r, r' >= 0");
    if (!(lambda2 >= 0.0)) throw DomainError("radial kernel needs Lambda^2 >= 0");
    const double nu = std::sqrt(lambda2 + 0.25);
    if (r == 0.0 || rp == 0.0) {
        if (nu != 0.5) return 0.0;
        const double s = r + rp;
        return 2.0 * std::exp(-s * s / (2.0 * tau)) / (tau * std::sqrt(2.0 * kPi * tau));
    }
    return std::exp(-(r - rp) * (r - rp) / (2.0 * tau)) / (tau * std::sqrt(r * rp)) * bessel_i_scaled(nu, r * rp / tau);
}

SeriesValue green3d(double tau, const Vec3& x, const Vec3& xp, const EigenBasis& basis, const Green3dOptions& options)
{
    if (!(tau > 0.0)) throw DomainError("green3d needs tau > 0");
    const Eigen::VectorXd psi = basis.eval_all(x[1], x[2]);
    const Eigen::VectorXd psip = basis.eval_all(xp[1], xp[2]);
    const Eigen::VectorXd nu = bessel_orders(basis);
    std::vector<double> radial(static_cast<std::size_t>(nu.size()));
    unscaled_radial(tau, x[0], xp[0], nu, radial.data());
    const double gauss = std::exp(-(x[0] - xp[0]) * (x[0] - xp[0]) / (2.0 * tau));

    SeriesValue out;
    const Eigen::Index n = nu.size();
    for (Eigen::Index k = 0; k < n; ++k) {
        const double term = gauss * radial[static_cast<std::size_t>(k)] * psi(k) * psip(k);
        out.value += term;
        if (k >= n - 5) out.tail += std::abs(term);
    }
    if (options.strict && out.tail > options.tail_tol * std::abs(out.value)) {
        throw NumericalError("green3d truncation tail " + std::to_string(out.tail) + " exceeds tolerance for value " +
                             std::to_string(out.value));
    }
    return out;
}

namespace {

// sum_n Psi_n(w') int g_n(tau, r, r') c_n(r) r^2 dr, with c_n(r) the angular projection of the payoff.
template <class Projection>
double radial_projection(double tau, double rp, const Eigen::VectorXd& psip, const Eigen::VectorXd& nu,
                         const ConeQuadrature& quad, Projection projection)
{
    const auto rule = radial_rule(tau, rp, quad, 6 * quad.radial_panels);
    std::vector<double> radial(static_cast<std::size_t>(nu.size()));
    Eigen::VectorXd coeff(nu.size());
    double total = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double r = rule.nodes[q];
        unscaled_radial(tau, r, rp, nu, radial.data());
        projection(r, coeff);
        double s = 0.0;
        for (Eigen::Index k = 0; k < nu.size(); ++k) s += radial[static_cast<std::size_t>(k)] * psip(k) * coeff(k);
        total += rule.weights[q] * std::exp(-(r - rp) * (r - rp) / (2.0 * tau)) * r * r * s;
    }
    return total;
}

} // namespace

double survival_3d(double t, const InitialState& state, const AngularDomain& domain, double T, const EigenBasis& basis,
                   const ConeQuadrature& quad)
{
    if (!(T > t)) throw DomainError("survival_3d needs T > t");
    const Vec3 sp = state_spherical(state, domain);
    if (T - t < 4.0 * quad.short_time_factor * sp[0] * sp[0] / basis.eigenvalues().maxCoeff()) {
        // The mode sum is unresolved at this horizon; count the exits instead.
        BoundaryData all;
        for (auto& f : all.facet) f = [](double, const Vec3&) { return 1.0; };
        return std::clamp(1.0 - ConeExitKernel(t, T, {}, state, domain, basis, quad).integrate(all, 0.0), 0.0, 1.0);
    }
    const Eigen::VectorXd psip = basis.eval_all(sp[1], sp[2]);
    const Eigen::VectorXd nu = bessel_orders(basis);
    const double q = radial_projection(T - t, sp[0], psip, nu, quad, [&](double, Eigen::VectorXd& c) { c = basis.mass_moments(); });
    return std::clamp(q, 0.0, 1.0);
}

ConeExitKernel::ConeExitKernel(double t, double T, std::span<const double> kinks, const InitialState& state,
                               const AngularDomain& domain, const EigenBasis& basis, const ConeQuadrature& quad)
    : t_(t), T_(T), quad_(quad)
{
    if (!(T > t)) throw DomainError("exit kernel needs T > t");
    if (quad.chebyshev_points < 4 || quad.radial_points < 1 || quad.radial_panels < 1 || quad.time_points < 1) {
        throw DomainError("exit kernel quadrature sizes too small");
    }
    const Vec3 sp = state_spherical(state, domain);
    rp_ = sp[0];
    const Eigen::VectorXd psip = basis.eval_all(sp[1], sp[2]);
    const Eigen::VectorXd nu = bessel_orders(basis);

    const TriMesh& mesh = basis.mesh();
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        if (!mesh.is_dirichlet(i)) continue;
        const auto f = mesh.flags[i];
        std::array<double, 3> share{(f & kOnPhiZero) ? 1.0 : 0.0, (f & kOnPhiMax) ? 1.0 : 0.0, (f & kOnSouth) ? 1.0 : 0.0};
        const double count = share[0] + share[1] + share[2];
        for (auto& s : share) s /= count;
        share_.push_back(share);
        unit_.push_back(domain.xyz_from_spherical(1.0, mesh.nodes[i][0], mesh.nodes[i][1]));
        rows.push_back(static_cast<Eigen::Index>(i));
    }
    const Eigen::Index nb = static_cast<Eigen::Index>(rows.size());
    // Exit density along node k's ray: -1/2 sum_n g_n Psi_n(w') F_kn.
    Eigen::MatrixXd w(nu.size(), nb);
    for (Eigen::Index k = 0; k < nb; ++k) {
        w.col(k) = -0.5 * psip.cwiseProduct(basis.boundary_flux().row(rows[static_cast<std::size_t>(k)]).transpose());
    }

    const double d[3] = {state.x0, state.y0, state.z0};
    const double tau_min = std::pow(std::min({d[0], d[1], d[2]}), 2) / 90.0;
    tau_c_ = tau_min;
    if (quad.short_time_factor > 0.0) {
        tau_c_ = std::clamp(quad.short_time_factor * rp_ * rp_ / basis.eigenvalues().maxCoeff(), tau_min, T - t);
    }
    build_short_parts(t, tau_min, d, domain.correlations());
    const auto rule = time_rule(t, T, tau_c_, kinks, quad.time_points);
    slices_.resize(rule.size());
    times_ = rule.nodes;
    const int K = quad.chebyshev_points;
    parallel_for(static_cast<int>(rule.size()), quad.threads, [&](int j) {
        Slice& s = slices_[static_cast<std::size_t>(j)];
        s.tp = rule.nodes[static_cast<std::size_t>(j)];
        s.weight = rule.weights[static_cast<std::size_t>(j)];
        const double tau = s.tp - t;
        const double cut = quad.gaussian_cut * std::sqrt(tau);
        s.a = std::max(0.0, rp_ - cut);
        s.b = rp_ + cut;
        const Chebyshev cheb(s.a, s.b, K);
        Eigen::MatrixXd radial(K, nu.size());
        std::vector<double> row(static_cast<std::size_t>(nu.size()));
        for (int k = 0; k < K; ++k) {
            unscaled_radial(tau, cheb.nodes[static_cast<std::size_t>(k)], rp_, nu, row.data());
            for (Eigen::Index n = 0; n < nu.size(); ++n) radial(k, n) = row[static_cast<std::size_t>(n)];
        }
        s.values = radial * w;
    });
}

void ConeExitKernel::build_short_parts(double t, double tau_min, const double* d, const CorrelationTriplet& rho)
{
    auto corr = [&](int i, int j) {
        if (i > j) std::swap(i, j);
        return i == 0 ? (j == 1 ? rho.xy() : rho.xz()) : rho.yz();
    };
    const auto early = time_rule(t, t + tau_c_, tau_min, {}, quad_.time_points);
    short_times_ = early.nodes;
    if (early.size() == 0) return;
    for (int f = 0; f < 3; ++f) {
        ShortPart& part = short_[static_cast<std::size_t>(f)];
        const int a = (f + 1) % 3, b = (f + 2) % 3;
        part.exit = f;
        part.wall = d[a] <= d[b] ? a : b;
        part.free = part.wall == a ? b : a;
        neglected_ = std::max(neglected_, std::erfc(d[part.free] / std::sqrt(2.0 * tau_c_)));

        // Free coordinate regressed on the (exit, wall) pair.
        const double rho_ew = corr(f, part.wall), r_ev = corr(f, part.free), r_wv = corr(part.wall, part.free);
        const double det = 1.0 - rho_ew * rho_ew;
        const double be = (r_ev - rho_ew * r_wv) / det, bw = (r_wv - rho_ew * r_ev) / det;
        const double resid = std::max(0.0, 1.0 - be * r_ev - bw * r_wv);

        const auto wedge = make_wedge_2d(rho_ew);
        const auto pol = polar_from_xy(d[f], d[part.wall], wedge);
        for (std::size_t i = 0; i < early.size(); ++i) {
            const double tau = early.nodes[i] - t;
            const double cut = quad_.gaussian_cut * std::sqrt(tau);
            const double lo = std::max(0.0, pol[0] - cut), hi = pol[0] + cut;
            QuadratureRule radial;
            for (int k = 0; k < quad_.short_radial_panels; ++k) {
                append_gauss_legendre(radial, quad_.short_radial_points, lo + (hi - lo) * k / quad_.short_radial_panels,
                                      lo + (hi - lo) * (k + 1) / quad_.short_radial_panels);
            }
            for (std::size_t q = 0; q < radial.size(); ++q) {
                const double r = radial.nodes[q];
                const double dphi = green2d_boundary_dphi(tau, r, pol[0], pol[1], wedge.phi0, true);
                const double wall = wedge.rho_bar * r;
                part.nodes.push_back({early.nodes[i], early.weights[i] * radial.weights[q] * (-0.5 * dphi / r), wall,
                                      d[part.free] - be * d[f] + bw * (wall - d[part.wall]), std::sqrt(resid * tau)});
            }
        }
    }
}

double ConeExitKernel::short_integral(const ShortPart& part, const BoundaryData& data, double rate) const
{
    const auto& fn = data.facet[static_cast<std::size_t>(part.exit)];
    if (!fn) return 0.0;
    const auto& gl = gauss_legendre(quad_.free_points);
    const double lim = 8.0, norm = 1.0 / std::sqrt(2.0 * kPi);
    double total = 0.0;
    for (const auto& n : part.nodes) {
        Vec3 xyz{};
        xyz[static_cast<std::size_t>(part.exit)] = 0.0;
        xyz[static_cast<std::size_t>(part.wall)] = n.wall;
        double expect = 0.0;
        if (n.free_sd == 0.0) {
            xyz[static_cast<std::size_t>(part.free)] = n.free_mean;
            expect = n.free_mean > 0.0 ? fn(n.tp, xyz) : 0.0;
        } else {
            // Paths whose free coordinate ends below zero were absorbed there first.
            const double lo = std::max(-lim, -n.free_mean / n.free_sd);
            if (lo >= lim) continue;
            for (int p = 0; p < quad_.free_panels; ++p) {
                const double a = lo + (lim - lo) * p / quad_.free_panels, b = lo + (lim - lo) * (p + 1) / quad_.free_panels;
                for (std::size_t q = 0; q < gl.size(); ++q) {
                    const double xi = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[q];
                    xyz[static_cast<std::size_t>(part.free)] = n.free_mean + n.free_sd * xi;
                    expect += 0.5 * (b - a) * gl.weights[q] * norm * std::exp(-0.5 * xi * xi) * fn(n.tp, xyz);
                }
            }
        }
        total += n.weight * std::exp(-rate * (n.tp - t_)) * expect;
    }
    return total;
}

double ConeExitKernel::slice_integral(const Slice& s, const BoundaryData& data) const
{
    const double tau = s.tp - t_;
    const Chebyshev cheb(s.a, s.b, quad_.chebyshev_points);
    const auto& gl = gauss_legendre(quad_.radial_points);
    std::vector<double> coeff;
    double total = 0.0;
    for (std::size_t k = 0; k < unit_.size(); ++k) {
        bool active = false;
        for (int f = 0; f < 3; ++f) active = active || (share_[k][f] > 0.0 && data.facet[f]);
        if (!active) continue;
        std::vector<double> breaks{s.a};
        if (data.radial_break) {
            const double rb = data.radial_break(s.tp, unit_[k]);
            if (rb > s.a && rb < s.b) breaks.push_back(rb);
        }
        breaks.push_back(s.b);
        for (std::size_t piece = 0; piece + 1 < breaks.size(); ++piece) {
            const double lo = breaks[piece], hi = breaks[piece + 1];
            for (int p = 0; p < quad_.radial_panels; ++p) {
                const double pa = lo + (hi - lo) * p / quad_.radial_panels;
                const double pb = lo + (hi - lo) * (p + 1) / quad_.radial_panels;
                for (std::size_t q = 0; q < gl.size(); ++q) {
                    const double r = 0.5 * (pa + pb) + 0.5 * (pb - pa) * gl.nodes[q];
                    const Vec3 xyz{r * unit_[k][0], r * unit_[k][1], r * unit_[k][2]};
                    double value = 0.0;
                    for (int f = 0; f < 3; ++f) {
                        if (share_[k][f] > 0.0 && data.facet[f]) value += share_[k][f] * data.facet[f](s.tp, xyz);
                    }
                    if (value == 0.0) continue;
                    cheb.coefficients(r, coeff);
                    double density = 0.0;
                    for (std::size_t c = 0; c < coeff.size(); ++c) {
                        density += coeff[c] * s.values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k));
                    }
                    density *= std::exp(-(r - rp_) * (r - rp_) / (2.0 * tau));
                    total += 0.5 * (pb - pa) * gl.weights[q] * density * value;
                }
            }
        }
    }
    return total;
}

double ConeExitKernel::integrate(const BoundaryData& data, double rate) const
{
    std::vector<double> parts(slices_.size(), 0.0);
    parallel_for(static_cast<int>(slices_.size()), quad_.threads, [&](int j) {
        const Slice& s = slices_[static_cast<std::size_t>(j)];
        parts[static_cast<std::size_t>(j)] = s.weight * std::exp(-rate * (s.tp - t_)) * slice_integral(s, data);
    });
    double total = 0.0;
    for (const auto& part : short_) total += short_integral(part, data, rate);
    for (double p : parts) total += p;
    return total;
}

double boundary_value_price(double t, double T, double rate, const InitialState& state, const AngularDomain& domain,
                            const EigenBasis& basis, const BoundaryData& data,
                            const std::function<double(const Vec3& xyz)>& terminal, const ConeQuadrature& quad)
{
    double value = 0.0;
    if (data.facet[0] || data.facet[1] || data.facet[2]) {
        value += ConeExitKernel(t, T, {}, state, domain, basis, quad).integrate(data, rate);
    }
    if (terminal) {
        const Vec3 sp = state_spherical(state, domain);
        const Eigen::VectorXd psip = basis.eval_all(sp[1], sp[2]);
        const Eigen::VectorXd nu = bessel_orders(basis);
        const TriMesh& mesh = basis.mesh();
        std::vector<Vec3> unit(mesh.size());
        for (std::size_t i = 0; i < mesh.size(); ++i) unit[i] = domain.xyz_from_spherical(1.0, mesh.nodes[i][0], mesh.nodes[i][1]);
        Eigen::VectorXd h(static_cast<Eigen::Index>(mesh.size()));
        const double v = radial_projection(T - t, sp[0], psip, nu, quad, [&](double r, Eigen::VectorXd& c) {
            for (std::size_t i = 0; i < mesh.size(); ++i) h(static_cast<Eigen::Index>(i)) = terminal({r * unit[i][0], r * unit[i][1], r * unit[i][2]});
            c = basis.mass_vectors().transpose() * h;
        });
        value += std::exp(-rate * (T - t)) * v;
    }
    return value;
}

InitialState TradeParties::state() const
{
    return make_initial_state(seller.x0(), reference.x0(), buyer.x0());
}

namespace {

// Loss on one facet: (1 - R) V+- at the reference name's distance, kinked where V changes sign.
BoundaryData loss_data(const ConeExitKernel& kernel, const CdsValueGrid& grid, Facet facet, double recovery, bool positive)
{
    auto crossing = std::make_shared<std::map<double, double>>();
    for (double tp : kernel.times()) (*crossing)[tp] = grid.zero_crossing(tp);
    BoundaryData data;
    data.facet[static_cast<int>(facet)] = [&grid, recovery, positive](double tp, const Vec3& xyz) {
        // Facet points on the reference name's own boundary can carry rounding below zero.
        const double y = std::max(0.0, xyz[1]);
        return (1.0 - recovery) * (positive ? grid.positive_part(tp, y) : grid.negative_part(tp, y));
    };
    data.radial_break = [crossing](double tp, const Vec3& unit) {
        const auto it = crossing->find(tp);
        if (it == crossing->end() || !(unit[1] > 0.0)) return -1.0;
        return it->second / unit[1];
    };
    return data;
}

double adjustment_3d(double t, const TradeParties& parties, const AngularDomain& domain, const EigenBasis& basis,
                     const CdsValueGrid& grid, const ConeQuadrature& quad, bool cva_side)
{
    const double recovery = cva_side ? parties.seller.recovery : parties.buyer.recovery;
    if (!(recovery >= 0.0 && recovery <= 1.0)) throw DomainError("recovery must lie in [0, 1]");
    if (t >= grid.maturity() || recovery == 1.0) return 0.0;
    const auto ends = grid.period_ends();
    const ConeExitKernel kernel(t, grid.maturity(), ends, parties.state(), domain, basis, quad);
    const auto data = loss_data(kernel, grid, cva_side ? Facet::PhiZero : Facet::South, recovery, cva_side);
    return std::max(0.0, kernel.integrate(data, grid.rate()));
}

} // namespace

double cva_3d(double t, const TradeParties& parties, const AngularDomain& domain, const EigenBasis& basis,
              const CdsValueGrid& grid, const ConeQuadrature& quad)
{
    return adjustment_3d(t, parties, domain, basis, grid, quad, true);
}

double dva_3d(double t, const TradeParties& parties, const AngularDomain& domain, const EigenBasis& basis,
              const CdsValueGrid& grid, const ConeQuadrature& quad)
{
    return adjustment_3d(t, parties, domain, basis, grid, quad, false);
}

std::string_view to_string(AdjustmentMode mode)
{
    switch (mode) {
    case AdjustmentMode::Standard: return "standard";
    case AdjustmentMode::CvaOnly: return "cva_only";
    case AdjustmentMode::DvaOnly: return "dva_only";
    case AdjustmentMode::Bilateral: return "bilateral";
    }
    return "?";
}

AdjustmentEngine::AdjustmentEngine(const CdsContract& contract, const TradeParties& parties, const AngularDomain& domain,
                                   const EigenBasis& basis, const ConeQuadrature& quad, const CdsGridSpec& grid_spec)
    : contract_(contract), parties_(parties), rho_(domain.correlations()), grid_(contract, parties.reference.recovery, grid_spec),
      kernel_(0.0, contract.maturity(), grid_.period_ends(), parties.state(), domain, basis, quad)
{
}

double AdjustmentEngine::cds_value(double coupon) const
{
    const auto legs = cds_legs(contract_.with_coupon(coupon), parties_.reference.x0(), parties_.reference.recovery);
    return legs.default_leg - legs.coupon_leg;
}

double AdjustmentEngine::adjustment(double coupon, bool cva_side) const
{
    const double recovery = cva_side ? parties_.seller.recovery : parties_.buyer.recovery;
    if (recovery == 1.0) return 0.0;
    const auto grid = grid_.with_coupon(coupon);
    const auto data = loss_data(kernel_, grid, cva_side ? Facet::PhiZero : Facet::South, recovery, cva_side);
    return std::max(0.0, kernel_.integrate(data, grid.rate()));
}

double AdjustmentEngine::cva(double coupon) const { return adjustment(coupon, true); }
double AdjustmentEngine::dva(double coupon) const { return adjustment(coupon, false); }

double AdjustmentEngine::unilateral_cva(double coupon) const
{
    if (parties_.seller.recovery == 1.0) return 0.0;
    return cva_2d(0.0, parties_.seller, parties_.reference, rho_.xy(), grid_.with_coupon(coupon));
}

double AdjustmentEngine::unilateral_dva(double coupon) const
{
    if (parties_.buyer.recovery == 1.0) return 0.0;
    return dva_2d(0.0, parties_.buyer, parties_.reference, rho_.yz(), grid_.with_coupon(coupon));
}

double AdjustmentEngine::breakeven(AdjustmentMode mode) const
{
    const double standard = breakeven_coupon(contract_, parties_.reference.x0(), parties_.reference.recovery);
    if (mode == AdjustmentMode::Standard) return standard;
    const bool with_cva = mode == AdjustmentMode::CvaOnly || mode == AdjustmentMode::Bilateral;
    const bool with_dva = mode == AdjustmentMode::DvaOnly || mode == AdjustmentMode::Bilateral;
    auto f = [&](double c) {
        switch (mode) {
        case AdjustmentMode::CvaOnly: return cds_value(c) - unilateral_cva(c);
        case AdjustmentMode::DvaOnly: return cds_value(c) + unilateral_dva(c);
        default: return cds_value(c) - cva(c) + dva(c);
        }
    };
    double c0 = standard, f0 = f(c0);
    double c1 = standard * (with_cva && !with_dva ? 0.95 : 1.05), f1 = f(c1);
    for (int it = 0; it < 60; ++it) {
        if (f1 == f0) break;
        const double c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
        c0 = c1;
        f0 = f1;
        c1 = c2;
        f1 = f(c1);
        if (std::abs(c1 - c0) < 1e-8) return c1;
    }
    throw NumericalError("adjusted breakeven did not converge: f(" + std::to_string(c0) + ") = " + std::to_string(f0) +
                         ", f(" + std::to_string(c1) + ") = " + std::to_string(f1));
}

double breakeven_adjusted(const CdsContract& contract, const TradeParties& parties, const AngularDomain& domain,
                          const EigenBasis& basis, AdjustmentMode mode, const ConeQuadrature& quad)
{
    return AdjustmentEngine(contract, parties, domain, basis, quad).breakeven(mode);
}

} // namespace wxva
