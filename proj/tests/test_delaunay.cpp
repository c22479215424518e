#include <catch2/catch_amalgamated.hpp>

#include "wedge_xva/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace wxva;
using P2 = std::array<double, 2>;

namespace {

double hull_area(std::vector<P2> pts)
{
    std::sort(pts.begin(), pts.end());
    std::vector<P2> h(2 * pts.size());
    std::size_t k = 0;
    auto cross = [](const P2& o, const P2& a, const P2& b) { return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]); };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    double a = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) a += h[i][0] * h[i + 1][1] - h[i + 1][0] * h[i][1];
    return 0.5 * a;
}

void check_triangulation(const std::vector<P2>& pts, const std::vector<Triangle>& tris, bool brute_empty_circle)
{
    double area = 0.0;
    for (const auto& t : tris) {
        const double o = orient2d(pts[t[0]], pts[t[1]], pts[t[2]]);
        REQUIRE(o > 0.0);
        area += 0.5 * o;
    }
    CHECK(area == Catch::Approx(hull_area(pts)).epsilon(1e-10));
    if (!brute_empty_circle) return;
    int violations = 0;
    for (const auto& t : tris) {
        const double scale = std::pow(std::abs(orient2d(pts[t[0]], pts[t[1]], pts[t[2]])), 2);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (static_cast<int>(i) == t[0] || static_cast<int>(i) == t[1] || static_cast<int>(i) == t[2]) continue;
            if (incircle(pts[t[0]], pts[t[1]], pts[t[2]], pts[i]) > 1e-9 * scale + 1e-14) ++violations;
        }
    }
    CHECK(violations == 0);
}

} // namespace

TEST_CASE("predicates", "[delaunay]")
{
    CHECK(orient2d({0, 0}, {1, 0}, {0, 1}) > 0.0);
    CHECK(orient2d({0, 0}, {1, 0}, {2, 0}) == 0.0);
    CHECK(incircle({0, 0}, {1, 0}, {0, 1}, {0.5, 0.5}) > 0.0);
    CHECK(incircle({0, 0}, {1, 0}, {0, 1}, {2, 2}) < 0.0);
    CHECK(incircle({0, 0}, {1, 0}, {1, 1}, {0, 1}) == 0.0);
}

TEST_CASE("random point sets", "[delaunay]")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n : {3, 10, 100, 600}) {
        std::vector<P2> pts;
        for (int i = 0; i < n; ++i) pts.push_back({u(rng), 3.0 * u(rng)});
        const auto tris = delaunay_triangulate(pts);
        CHECK(tris.size() >= static_cast<std::size_t>(n - 2));
        check_triangulation(pts, tris, true);
    }
}

TEST_CASE("grid with collinear boundary rows", "[delaunay]")
{
    std::vector<P2> pts;
    for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 12; ++j) pts.push_back({0.1 * i, 0.07 * j});
    }
    const auto tris = delaunay_triangulate(pts);
    CHECK(tris.size() == 2u * 20u * 12u);
    check_triangulation(pts, tris, false);
}

TEST_CASE("large set covers hull", "[delaunay]")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<P2> pts;
    for (int i = 0; i < 20000; ++i) pts.push_back({g(rng), 0.01 * g(rng)});
    const auto tris = delaunay_triangulate(pts);
    check_triangulation(pts, tris, false);
    CHECK(tris.size() > 39000u);
}
