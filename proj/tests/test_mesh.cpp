#include <catch2/catch_amalgamated.hpp>

#include "wedge_xva/errors.hpp"
#include "wedge_xva/mesh.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

using namespace wxva;

namespace {

AngularDomain domain_of(double a, double b, double c) { return AngularDomain(CorrelationTriplet(a, b, c)); }

// Edge -> adjacent triangle count, and the triangles' opposite vertices.
std::map<std::pair<int, int>, std::vector<int>> edge_map(const TriMesh& m)
{
    std::map<std::pair<int, int>, std::vector<int>> edges;
    for (const auto& t : m.triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = t[e], b = t[(e + 1) % 3];
            edges[{std::min(a, b), std::max(a, b)}].push_back(t[(e + 2) % 3]);
        }
    }
    return edges;
}

void check_invariants(const AngularDomain& d, const TriMesh& m)
{
    const double tmin = m.theta_min;
    double area = 0.0;
    for (const auto& t : m.triangles) {
        const double o = orient2d(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]]);
        REQUIRE(o > 0.0);
        area += 0.5 * o;
    }
    CHECK(std::abs(area / chart_area(d, tmin) - 1.0) < 5e-3);
    CHECK(m.min_quality >= 0.3);

    for (std::size_t i = 0; i < m.size(); ++i) {
        const double phi = m.nodes[i][0], theta = m.nodes[i][1];
        const auto f = m.flags[i];
        if (f & kOnPhiZero) CHECK(phi == 0.0);
        if (f & kOnPhiMax) CHECK(phi == d.phi0());
        if (f & kOnSouth) CHECK(theta == d.theta_of_phi(phi));
        if (f & kOnCap) CHECK(theta == tmin);
        if (m.is_dirichlet(i)) CHECK(std::abs(d.signed_distance(phi, theta)) < 1e-12);
        if (f == 0) CHECK(chart_level_set(d, tmin, phi, theta) < 0.0);
    }

    // Conforming: every edge has one or two triangles; hull edges join boundary nodes.
    int interior = 0, delaunay = 0;
    for (const auto& [e, opp] : edge_map(m)) {
        REQUIRE(opp.size() <= 2);
        if (opp.size() == 1) {
            CHECK(m.flags[e.first] != 0);
            CHECK(m.flags[e.second] != 0);
            continue;
        }
        ++interior;
        // Flip test: the opposite vertex must not lie inside the circumcircle.
        for (const auto& t : m.triangles) {
            int hits = 0, other = -1;
            for (int v : t) {
                if (v == e.first || v == e.second) ++hits;
                else other = v;
            }
            if (hits == 2 && other == opp[0]) {
                const int fourth = opp[1];
                if (incircle(m.nodes[t[0]], m.nodes[t[1]], m.nodes[t[2]], m.nodes[fourth]) <= 1e-14) ++delaunay;
                break;
            }
        }
    }
    CHECK(delaunay >= 0.99 * interior);
}

} // namespace

TEST_CASE("edge length policy", "[mesh]")
{
    const auto d = domain_of(0.8, 0.5, 0.3);
    const auto uniform = edge_length_policy(d, 1.0);
    CHECK(uniform(0.3, 0.4) == 1.0);
    CHECK(uniform(1.0, 1.0) == 1.0);
    const auto graded = edge_length_policy(d, 3.0);
    CHECK(graded(0.0, 0.8) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    CHECK(graded(d.phi0(), 0.8) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    CHECK(graded(1.0, d.theta_of_phi(1.0)) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    CHECK(graded(1.0, 1.0) > graded(1.0, 0.3));
    CHECK_THROWS_AS(edge_length_policy(d, 0.5), DomainError);
}

TEST_CASE("chart level set and area", "[mesh]")
{
    const auto d = domain_of(0.0, 0.0, 0.0);
    CHECK(d.phi0() == Catch::Approx(std::numbers::pi / 2));
    CHECK(chart_area(d, 1e-3) == Catch::Approx(std::numbers::pi / 2 * (std::numbers::pi / 2 - 1e-3)).epsilon(1e-12));
    CHECK(chart_level_set(d, 1e-3, 0.5, 0.5) < 0.0);
    CHECK(chart_level_set(d, 1e-3, -0.1, 0.5) == Catch::Approx(0.1));
    CHECK(chart_level_set(d, 1e-3, 0.5, 0.0) == Catch::Approx(1e-3));
    CHECK(chart_level_set(d, 1e-3, 0.5, 1.7) == Catch::Approx(1.7 - std::numbers::pi / 2));
}

TEST_CASE("octant mesh", "[mesh]")
{
    const auto d = domain_of(0.0, 0.0, 0.0);
    MeshSpec spec;
    const auto m = generate_mesh(d, spec);
    CHECK(m.size() >= 1490u);
    CHECK(m.size() <= 1500u);
    check_invariants(d, m);
    int on_facets = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double phi = m.nodes[i][0], theta = m.nodes[i][1];
        if (m.is_dirichlet(i)) {
            ++on_facets;
            CHECK((phi == 0.0 || phi == std::numbers::pi / 2 || std::abs(theta - std::numbers::pi / 2) < 1e-15));
        }
    }
    CHECK(on_facets > 100);
}

TEST_CASE("correlated mesh", "[mesh]")
{
    for (auto rho : {std::array{0.8, 0.5, 0.3}, std::array{0.8, 0.2, 0.5}, std::array{0.2, -0.1, -0.6}}) {
        const auto d = domain_of(rho[0], rho[1], rho[2]);
        const auto m = generate_mesh(d, MeshSpec{});
        check_invariants(d, m);
    }
}

TEST_CASE("coarse mesh", "[mesh]")
{
    const auto d = domain_of(0.8, 0.2, 0.5);
    MeshSpec spec;
    spec.n_points = 50;
    const auto m = generate_mesh(d, spec);
    CHECK(m.size() >= 45u);
    check_invariants(d, m);
}

TEST_CASE("mesh is deterministic in the seed", "[mesh]")
{
    const auto d = domain_of(0.8, 0.5, 0.3);
    MeshSpec spec;
    spec.n_points = 400;
    const auto a = generate_mesh(d, spec);
    const auto b = generate_mesh(d, spec);
    CHECK(a.nodes == b.nodes);
    CHECK(a.triangles == b.triangles);
    spec.seed += 1;
    const auto c = generate_mesh(d, spec);
    CHECK(a.nodes != c.nodes);
}

TEST_CASE("quality floor is enforced", "[mesh]")
{
    MeshSpec spec;
    spec.n_points = 200;
    spec.quality_floor = 0.99;
    CHECK_THROWS_AS(generate_mesh(domain_of(0.8, 0.5, 0.3), spec), MeshQualityError);
}

TEST_CASE("mesh CSV round trip", "[mesh]")
{
    const auto d = domain_of(0.8, 0.5, 0.3);
    MeshSpec spec;
    spec.n_points = 300;
    const auto m = generate_mesh(d, spec);
    std::stringstream nodes, tris;
    write_mesh_csv(m, nodes, tris);
    const auto back = read_mesh_csv(nodes, tris, m.theta_min);
    CHECK(back.nodes == m.nodes);
    CHECK(back.triangles == m.triangles);
    CHECK(back.flags == m.flags);
    CHECK(back.min_quality == m.min_quality);

    std::stringstream bad_nodes("phi,theta,flags\n0.1,0.2,0\n"), bad_tris("i,j,k\n0,1,5\n");
    CHECK_THROWS_AS(read_mesh_csv(bad_nodes, bad_tris, 1e-3), IoError);
}
