#include "wedge_xva/delaunay.hpp"

#include "wedge_xva/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wxva {

using P2 = std::array<double, 2>;

double orient2d(const P2& a, const P2& b, const P2& c)
{
    const long double acx = (long double)a[0] - c[0], acy = (long double)a[1] - c[1];
    const long double bcx = (long double)b[0] - c[0], bcy = (long double)b[1] - c[1];
    return static_cast<double>(acx * bcy - acy * bcx);
}

double incircle(const P2& a, const P2& b, const P2& c, const P2& d)
{
    const long double adx = (long double)a[0] - d[0], ady = (long double)a[1] - d[1];
    const long double bdx = (long double)b[0] - d[0], bdy = (long double)b[1] - d[1];
    const long double cdx = (long double)c[0] - d[0], cdy = (long double)c[1] - d[1];
    const long double ad = adx * adx + ady * ady;
    const long double bd = bdx * bdx + bdy * bdy;
    const long double cd = cdx * cdx + cdy * cdy;
    return static_cast<double>(adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx));
}

namespace {

struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nbr;  // neighbour across the edge opposite v[i]; -1 on the hull
    bool alive;
};

class Triangulator {
public:
    Triangulator(std::vector<P2> pts, P2 centre) : pts_(std::move(pts)), centre_(centre) {}

    std::vector<Triangle> run(std::size_t n_real)
    {
        n_real_ = n_real;
        mark_.reserve(4 * n_real + 16);
        // Super triangle: vertices n, n+1, n+2 are appended by the caller.
        const int s = static_cast<int>(n_real);
        tris_.push_back({{s, s + 1, s + 2}, {-1, -1, -1}, true});
        mark_.push_back(0);
        last_ = 0;

        std::vector<int> order(n_real);
        std::iota(order.begin(), order.end(), 0);
        spatial_sort(order);
        for (int i : order) insert(i);

        std::vector<Triangle> out;
        for (const auto& t : tris_) {
            if (!t.alive) continue;
            if (t.v[0] >= s || t.v[1] >= s || t.v[2] >= s) continue;
            out.push_back(t.v);
        }
        return out;
    }

private:
    void spatial_sort(std::vector<int>& order) const
    {
        // Snake order over a coarse grid keeps consecutive insertions close, so walks stay short.
        double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
        for (std::size_t i = 0; i < n_real_; ++i) {
            for (int k = 0; k < 2; ++k) {
                lo[k] = std::min(lo[k], pts_[i][k]);
                hi[k] = std::max(hi[k], pts_[i][k]);
            }
        }
        const int g = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_real_) / 4.0)));
        auto key = [&](int i) {
            const int cx = std::min(g - 1, static_cast<int>(g * (pts_[i][0] - lo[0]) / (hi[0] - lo[0] + 1e-300)));
            const int cy = std::min(g - 1, static_cast<int>(g * (pts_[i][1] - lo[1]) / (hi[1] - lo[1] + 1e-300)));
            const int col = (cy % 2 == 0) ? cx : g - 1 - cx;
            return std::make_pair(cy * g + col, pts_[i][0]);
        };
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
    }

    P2 edge_a(const Tri& t, int i) const { return pts_[t.v[(i + 1) % 3]]; }
    P2 edge_b(const Tri& t, int i) const { return pts_[t.v[(i + 2) % 3]]; }

    int locate(const P2& p)
    {
        int t = last_;
        if (!tris_[t].alive) t = first_alive();
        for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
            bool moved = false;
            const int start = static_cast<int>(steps % 3);
            for (int k = 0; k < 3; ++k) {
                const int i = (start + k) % 3;
                if (orient2d(edge_a(tris_[t], i), edge_b(tris_[t], i), p) < 0.0 && tris_[t].nbr[i] >= 0) {
                    t = tris_[t].nbr[i];
                    moved = true;
                    break;
                }
            }
            if (!moved) return t;
        }
        // Walk cycled on a degenerate configuration; fall back to a scan.
        for (std::size_t k = 0; k < tris_.size(); ++k) {
            const auto& tr = tris_[k];
            if (!tr.alive) continue;
            bool inside = true;
            for (int i = 0; i < 3 && inside; ++i) inside = orient2d(edge_a(tr, i), edge_b(tr, i), p) >= 0.0;
            if (inside) return static_cast<int>(k);
        }
        throw NumericalError("Delaunay point location failed");
    }

    bool is_super(int v) const { return v >= static_cast<int>(n_real_); }

    // Super vertices act as points at infinity: a circle through one of them degenerates to a
    // half-plane, through two of them to the half-plane beyond the finite vertex.
    bool in_circumcircle(const Tri& t, const P2& p) const
    {
        int n_super = 0;
        for (int v : t.v) n_super += is_super(v);
        if (n_super == 0) return incircle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], p) > 0.0;
        if (n_super == 3) return true;
        if (n_super == 1) {
            int k = 0;
            while (!is_super(t.v[k])) ++k;
            const P2& a = pts_[t.v[(k + 1) % 3]];
            const P2& b = pts_[t.v[(k + 2) % 3]];
            const double o = orient2d(a, b, p);
            if (o != 0.0) return o > 0.0;
            return (p[0] - a[0]) * (p[0] - b[0]) + (p[1] - a[1]) * (p[1] - b[1]) < 0.0;
        }
        int k = 0;
        while (is_super(t.v[k])) ++k;
        const P2& a = pts_[t.v[k]];
        const P2& s1 = pts_[t.v[(k + 1) % 3]];
        const P2& s2 = pts_[t.v[(k + 2) % 3]];
        const double mx = 0.5 * (s1[0] + s2[0]) - centre_[0], my = 0.5 * (s1[1] + s2[1]) - centre_[1];
        return mx * (p[0] - a[0]) + my * (p[1] - a[1]) > 0.0;
    }

    int first_alive() const
    {
        for (std::size_t k = tris_.size(); k-- > 0;) {
            if (tris_[k].alive) return static_cast<int>(k);
        }
        return 0;
    }

    void insert(int pi)
    {
        const P2 p = pts_[pi];
        const int t0 = locate(p);
        for (int v : tris_[t0].v) {
            if (pts_[v][0] == p[0] && pts_[v][1] == p[1]) return;  // duplicate
        }
        ++stamp_;
        std::vector<int> cavity{t0};
        mark_[t0] = stamp_;
        for (std::size_t k = 0; k < cavity.size(); ++k) {
            const Tri& t = tris_[cavity[k]];
            for (int i = 0; i < 3; ++i) {
                const int n = t.nbr[i];
                if (n < 0 || mark_[n] == stamp_) continue;
                const Tri& tn = tris_[n];
                if (in_circumcircle(tn, p)) {
                    mark_[n] = stamp_;
                    cavity.push_back(n);
                }
            }
        }
        // Inconsistent rounding can make the cavity non-star-shaped; peel offending triangles.
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t k = 0; k < cavity.size(); ++k) {
                const int c = cavity[k];
                if (c == t0) continue;
                const Tri& t = tris_[c];
                for (int i = 0; i < 3; ++i) {
                    const int n = t.nbr[i];
                    if (n >= 0 && mark_[n] == stamp_) continue;
                    if (orient2d(edge_a(t, i), edge_b(t, i), p) <= 0.0) {
                        mark_[c] = 0;
                        cavity.erase(cavity.begin() + static_cast<long>(k));
                        changed = true;
                        break;
                    }
                }
                if (changed) break;
            }
        }

        // New fan around p over the cavity boundary.
        struct Edge { int a, b, outside, slot; };
        std::vector<Edge> boundary;
        for (int c : cavity) {
            const Tri& t = tris_[c];
            for (int i = 0; i < 3; ++i) {
                const int n = t.nbr[i];
                if (n >= 0 && mark_[n] == stamp_) continue;
                int slot = -1;
                if (n >= 0) {
                    for (int j = 0; j < 3; ++j) {
                        if (tris_[n].nbr[j] == c) slot = j;
                    }
                }
                boundary.push_back({t.v[(i + 1) % 3], t.v[(i + 2) % 3], n, slot});
            }
        }
        for (int c : cavity) tris_[c].alive = false;

        const int base = static_cast<int>(tris_.size());
        for (const auto& e : boundary) {
            const int id = static_cast<int>(tris_.size());
            // v = (a, b, p): the edge opposite p is (a, b), facing the outside triangle.
            tris_.push_back({{e.a, e.b, pi}, {-1, -1, e.outside}, true});
            mark_.push_back(0);
            if (e.outside >= 0) tris_[e.outside].nbr[e.slot] = id;
        }
        // Link the fan: triangle starting at a neighbours the one ending at a, and so on.
        const int count = static_cast<int>(tris_.size()) - base;
        std::vector<std::pair<int, int>> by_a, by_b;
        for (int k = 0; k < count; ++k) {
            by_a.emplace_back(tris_[base + k].v[0], base + k);
            by_b.emplace_back(tris_[base + k].v[1], base + k);
        }
        std::sort(by_a.begin(), by_a.end());
        std::sort(by_b.begin(), by_b.end());
        auto find = [](const std::vector<std::pair<int, int>>& m, int key) {
            auto it = std::lower_bound(m.begin(), m.end(), std::make_pair(key, -1));
            return (it != m.end() && it->first == key) ? it->second : -1;
        };
        for (int k = 0; k < count; ++k) {
            Tri& t = tris_[base + k];
            t.nbr[0] = find(by_a, t.v[1]);  // edge (b, p) is shared with the fan triangle starting at b
            t.nbr[1] = find(by_b, t.v[0]);  // edge (p, a) is shared with the fan triangle ending at a
        }
        last_ = base;
    }

    std::vector<P2> pts_;
    P2 centre_;
    std::size_t n_real_ = 0;
    std::vector<Tri> tris_;
    std::vector<int> mark_;
    int stamp_ = 0;
    int last_ = 0;
};

} // namespace

std::vector<Triangle> delaunay_triangulate(const std::vector<P2>& points)
{
    if (points.size() < 3) return {};
    double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
    for (const auto& p : points) {
        for (int k = 0; k < 2; ++k) {
            lo[k] = std::min(lo[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    const double cx = 0.5 * (lo[0] + hi[0]), cy = 0.5 * (lo[1] + hi[1]);
    const double span = std::max({hi[0] - lo[0], hi[1] - lo[1], 1e-12});
    const double big = 1e3 * span;
    std::vector<P2> pts = points;
    pts.push_back({cx - big, cy - big});
    pts.push_back({cx + big, cy - big});
    pts.push_back({cx, cy + big});
    Triangulator tr(std::move(pts), {cx, cy - big / 3.0});
    return tr.run(points.size());
}

} // namespace wxva
