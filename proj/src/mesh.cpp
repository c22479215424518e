#include "wedge_xva/mesh.hpp"

#include "wedge_xva/errors.hpp"
#include "wedge_xva/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <cctype>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace wxva {

namespace {

double chart_diameter(const AngularDomain& domain, double theta_min)
{
    double top = 0.0;
    for (int k = 0; k <= 64; ++k) top = std::max(top, domain.theta_of_phi(domain.phi0() * k / 64.0));
    return std::hypot(domain.phi0(), top - theta_min);
}

// The four pieces of the level set; index 0..3 = phi=0, phi=phi0, south, cap.
std::array<double, 4> level_terms(const AngularDomain& domain, double theta_min, double phi, double theta)
{
    const double pc = std::clamp(phi, 0.0, domain.phi0());
    const double slope = domain.dtheta_dphi(pc);
    const double south = (theta - domain.theta_of_phi(pc)) / std::sqrt(1.0 + slope * slope);
    return {-phi, phi - domain.phi0(), south, theta_min - theta};
}

double radius_ratio(const Vec2& p, const Vec2& q, const Vec2& r)
{
    const double a = std::hypot(q[0] - r[0], q[1] - r[1]);
    const double b = std::hypot(p[0] - r[0], p[1] - r[1]);
    const double c = std::hypot(p[0] - q[0], p[1] - q[1]);
    const double den = a * b * c;
    if (den <= 0.0) return 0.0;
    return std::max(0.0, (b + c - a) * (c + a - b) * (a + b - c) / den);
}

struct Bar {
    int i, j;
    bool operator<(const Bar& o) const { return i != o.i ? i < o.i : j < o.j; }
    bool operator==(const Bar& o) const = default;
};

} // namespace

double chart_level_set(const AngularDomain& domain, double theta_min, double phi, double theta)
{
    const auto t = level_terms(domain, theta_min, phi, theta);
    return *std::max_element(t.begin(), t.end());
}

double chart_area(const AngularDomain& domain, double theta_min)
{
    QuadratureRule rule;
    for (int k = 0; k < 64; ++k) append_gauss_legendre(rule, 16, domain.phi0() * k / 64.0, domain.phi0() * (k + 1) / 64.0);
    double area = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        area += rule.weights[k] * (domain.theta_of_phi(rule.nodes[k]) - theta_min);
    }
    return area;
}

EdgeLengthFn edge_length_policy(const AngularDomain& domain, double ratio, double theta_min)
{
    if (!(ratio >= 1.0)) throw DomainError("boundary refinement ratio must be >= 1");
    const double w = 0.1 * chart_diameter(domain, theta_min);
    const double amp = 1.0 - 1.0 / ratio;
    return [domain, w, amp](double phi, double theta) {
        const double d = std::abs(domain.signed_distance(phi, theta));
        return 1.0 - amp * std::exp(-d / w);
    };
}

void update_quality(TriMesh& mesh)
{
    double lo = 1.0, sum = 0.0;
    for (const auto& t : mesh.triangles) {
        const double q = radius_ratio(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
        lo = std::min(lo, q);
        sum += q;
    }
    mesh.min_quality = mesh.triangles.empty() ? 0.0 : lo;
    mesh.mean_quality = mesh.triangles.empty() ? 0.0 : sum / static_cast<double>(mesh.triangles.size());
}

TriMesh generate_mesh(const AngularDomain& domain, const MeshSpec& spec, EdgeLengthFn edge_fn)
{
    if (spec.n_points < 8) throw DomainError("mesh needs at least 8 points");
    if (spec.n_iters < 1) throw DomainError("mesh needs at least one iteration");
    if (!edge_fn) edge_fn = edge_length_policy(domain, spec.refinement, spec.theta_min);

    const double tmin = spec.theta_min;
    const double phi0 = domain.phi0();
    const double diameter = chart_diameter(domain, tmin);
    auto fd = [&](double phi, double theta) { return chart_level_set(domain, tmin, phi, theta); };

    // Bounding box and the relative-size integral that fixes the absolute edge scale.
    double top = 0.0;
    for (int k = 0; k <= 256; ++k) top = std::max(top, domain.theta_of_phi(phi0 * k / 256.0));
    double hmin = 1.0, inv_h2 = 0.0, cells = 0.0;
    const int g = 80;
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const double phi = phi0 * (i + 0.5) / g;
            const double theta = tmin + (top - tmin) * (j + 0.5) / g;
            if (fd(phi, theta) > 0.0) continue;
            const double h = edge_fn(phi, theta);
            hmin = std::min(hmin, h);
            inv_h2 += 1.0 / (h * h);
            cells += 1.0;
        }
    }
    const double area = chart_area(domain, tmin);
    const double h0 = std::sqrt(2.0 / (std::sqrt(3.0) * spec.n_points) * area * inv_h2 / std::max(cells, 1.0));
    const double geps = 1e-3 * h0;
    const double deps = 1e-7 * h0;

    // Fixed corners, then rejection sampling against the density 1/h^2.
    std::vector<Vec2> p = {{0.0, tmin}, {phi0, tmin}, {0.0, domain.theta_of_phi(0.0)}, {phi0, domain.theta_of_phi(phi0)}};
    const std::size_t n_fixed = p.size();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    while (p.size() < static_cast<std::size_t>(spec.n_points)) {
        const double phi = phi0 * u01(rng);
        const double theta = tmin + (top - tmin) * u01(rng);
        const double accept = u01(rng);
        if (fd(phi, theta) >= -geps) continue;
        const double r = hmin / edge_fn(phi, theta);
        if (accept < r * r) p.push_back({phi, theta});
    }
    const std::size_t n = p.size();

    auto project = [&](Vec2& q) {
        for (int it = 0; it < 6; ++it) {
            const double d = fd(q[0], q[1]);
            if (d <= 0.0) return;
            const double gx = (fd(q[0] + deps, q[1]) - d) / deps;
            const double gy = (fd(q[0], q[1] + deps) - d) / deps;
            const double g2 = gx * gx + gy * gy;
            if (g2 <= 0.0) return;
            q[0] -= d * gx / g2;
            q[1] -= d * gy / g2;
        }
    };

    auto triangulate = [&](const std::vector<Vec2>& pts) {
        std::vector<std::array<double, 2>> raw(pts.begin(), pts.end());
        auto tris = delaunay_triangulate(raw);
        std::vector<Triangle> kept;
        kept.reserve(tris.size());
        for (const auto& t : tris) {
            const double cx = (pts[t[0]][0] + pts[t[1]][0] + pts[t[2]][0]) / 3.0;
            const double cy = (pts[t[0]][1] + pts[t[1]][1] + pts[t[2]][1]) / 3.0;
            if (fd(cx, cy) < -geps) kept.push_back(t);
        }
        return kept;
    };

    const double fscale = 1.2, dt = 0.2, ttol = 0.1;
    std::vector<Vec2> pold(n, {1e300, 1e300});
    std::vector<Triangle> tris;
    std::vector<Bar> bars;
    std::vector<Vec2> force(n);
    double edge_scale = h0;
    for (int iter = 0; iter < spec.n_iters; ++iter) {
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) moved = std::max(moved, std::hypot(p[i][0] - pold[i][0], p[i][1] - pold[i][1]));
        if (moved > ttol * h0) {
            pold = p;
            tris = triangulate(p);
            bars.clear();
            for (const auto& t : tris) {
                for (int e = 0; e < 3; ++e) {
                    const int a = t[e], b = t[(e + 1) % 3];
                    bars.push_back({std::min(a, b), std::max(a, b)});
                }
            }
            std::sort(bars.begin(), bars.end());
            bars.erase(std::unique(bars.begin(), bars.end()), bars.end());
        }

        std::vector<double> len(bars.size()), hb(bars.size());
        double sl = 0.0, sh = 0.0;
        for (std::size_t k = 0; k < bars.size(); ++k) {
            const auto& a = p[bars[k].i];
            const auto& b = p[bars[k].j];
            len[k] = std::hypot(a[0] - b[0], a[1] - b[1]);
            hb[k] = edge_fn(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
            sl += len[k] * len[k];
            sh += hb[k] * hb[k];
        }
        const double scale = fscale * std::sqrt(sl / sh);
        edge_scale = scale / fscale;
        std::fill(force.begin(), force.end(), Vec2{0.0, 0.0});
        for (std::size_t k = 0; k < bars.size(); ++k) {
            const double f = std::max(hb[k] * scale - len[k], 0.0);
            if (f == 0.0 || len[k] == 0.0) continue;
            const auto& a = p[bars[k].i];
            const auto& b = p[bars[k].j];
            const double fx = f / len[k] * (a[0] - b[0]), fy = f / len[k] * (a[1] - b[1]);
            force[bars[k].i][0] += fx;
            force[bars[k].i][1] += fy;
            force[bars[k].j][0] -= fx;
            force[bars[k].j][1] -= fy;
        }

        double max_step = 0.0;
        for (std::size_t i = n_fixed; i < n; ++i) {
            p[i][0] += dt * force[i][0];
            p[i][1] += dt * force[i][1];
            project(p[i]);
            if (fd(p[i][0], p[i][1]) < -geps) max_step = std::max(max_step, dt * std::hypot(force[i][0], force[i][1]));
        }
        if (max_step < 1e-4 * diameter) break;
    }

    // Snap near-boundary nodes exactly onto their facets, then thin out boundary nodes that
    // snapping left too close together.
    TriMesh mesh;
    mesh.theta_min = tmin;
    std::vector<std::uint8_t> flags(n, 0);
    std::vector<double> hloc(n);
    for (std::size_t i = 0; i < n; ++i) {
        hloc[i] = edge_scale * edge_fn(std::clamp(p[i][0], 0.0, phi0), std::max(p[i][1], tmin));
        const double snap = i < n_fixed ? 1e-3 * h0 : 0.45 * hloc[i];
        auto t = level_terms(domain, tmin, p[i][0], p[i][1]);
        if (t[0] > -snap) { p[i][0] = 0.0; flags[i] |= kOnPhiZero; }
        if (t[1] > -snap) { p[i][0] = phi0; flags[i] |= kOnPhiMax; }
        t = level_terms(domain, tmin, p[i][0], p[i][1]);
        if (t[2] > -snap) { p[i][1] = domain.theta_of_phi(p[i][0]); flags[i] |= kOnSouth; }
        if (t[3] > -snap) { p[i][1] = tmin; flags[i] |= kOnCap; }
    }
    std::vector<char> keep(n, 1);
    for (std::size_t i = n_fixed; i < n; ++i) {
        if (!flags[i]) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !keep[j] || !(flags[i] & flags[j])) continue;
            if (std::hypot(p[i][0] - p[j][0], p[i][1] - p[j][1]) < 0.5 * hloc[i]) {
                keep[i] = 0;
                break;
            }
        }
    }
    std::vector<Vec2> kept_pts;
    std::vector<std::uint8_t> kept_flags;
    for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        kept_pts.push_back(p[i]);
        kept_flags.push_back(flags[i]);
    }
    p = std::move(kept_pts);
    flags = std::move(kept_flags);
    tris = triangulate(p);

    // Drop nodes that ended up in no triangle.
    const std::size_t m = p.size();
    std::vector<int> used(m, 0);
    for (const auto& t : tris) {
        for (int v : t) used[v] = 1;
    }
    std::vector<int> remap(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
        if (!used[i]) continue;
        remap[i] = static_cast<int>(mesh.nodes.size());
        mesh.nodes.push_back(p[i]);
        mesh.flags.push_back(flags[i]);
    }
    for (auto t : tris) {
        for (int& v : t) v = remap[v];
        mesh.triangles.push_back(t);
    }
    update_quality(mesh);

    if (mesh.min_quality < spec.quality_floor) {
        std::size_t worst = 0;
        double wq = 2.0;
        for (std::size_t k = 0; k < mesh.triangles.size(); ++k) {
            const auto& t = mesh.triangles[k];
            const double q = radius_ratio(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
            if (q < wq) { wq = q; worst = k; }
        }
        const auto& t = mesh.triangles[worst];
        std::ostringstream msg;
        msg << "mesh quality " << wq << " below floor " << spec.quality_floor << " at triangle " << worst << " (";
        for (int k = 0; k < 3; ++k) msg << (k ? "; " : "") << mesh.nodes[t[k]][0] << ", " << mesh.nodes[t[k]][1];
        msg << ")";
        throw MeshQualityError(msg.str());
    }
    return mesh;
}

void write_mesh_csv(const TriMesh& mesh, std::ostream& nodes, std::ostream& triangles)
{
    char buf[96];
    nodes << "phi,theta,flags\n";
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", mesh.nodes[i][0], mesh.nodes[i][1], int(mesh.flags[i]));
        nodes << buf;
    }
    triangles << "i,j,k\n";
    for (const auto& t : mesh.triangles) triangles << t[0] << ',' << t[1] << ',' << t[2] << '\n';
    if (!nodes || !triangles) throw IoError("failed to write mesh CSV");
}

TriMesh read_mesh_csv(std::istream& nodes, std::istream& triangles, double theta_min)
{
    auto fields = [](const std::string& line) {
        std::vector<std::string> out;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) out.push_back(f);
        return out;
    };
    auto is_header = [](const std::string& line) {
        return !line.empty() && !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-' || line[0] == '.' || line[0] == '+');
    };

    TriMesh mesh;
    mesh.theta_min = theta_min;
    std::string line;
    while (std::getline(nodes, line)) {
        if (line.empty() || is_header(line)) continue;
        const auto f = fields(line);
        if (f.size() < 2) throw IoError("malformed mesh node row: " + line);
        try {
            mesh.nodes.push_back({std::stod(f[0]), std::stod(f[1])});
            mesh.flags.push_back(f.size() > 2 ? static_cast<std::uint8_t>(std::stoi(f[2])) : 0);
        } catch (const std::exception&) {
            throw IoError("malformed mesh node row: " + line);
        }
    }
    const int nn = static_cast<int>(mesh.nodes.size());
    while (std::getline(triangles, line)) {
        if (line.empty() || is_header(line)) continue;
        const auto f = fields(line);
        if (f.size() != 3) throw IoError("malformed mesh triangle row: " + line);
        Triangle t{};
        try {
            for (int k = 0; k < 3; ++k) t[k] = std::stoi(f[k]);
        } catch (const std::exception&) {
            throw IoError("malformed mesh triangle row: " + line);
        }
        for (int v : t) {
            if (v < 0 || v >= nn) throw IoError("mesh triangle index out of range: " + line);
        }
        if (orient2d(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]) < 0.0) std::swap(t[1], t[2]);
        mesh.triangles.push_back(t);
    }
    if (mesh.triangles.empty()) throw IoError("mesh has no triangles");
    update_quality(mesh);
    return mesh;
}

} // namespace wxva
