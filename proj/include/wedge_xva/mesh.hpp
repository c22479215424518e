#pragma once

#include "wedge_xva/delaunay.hpp"
#include "wedge_xva/geometry.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace wxva {

/// Per-node facet membership bits.
enum NodeFlag : std::uint8_t {
    kOnPhiZero = 1,  // x = 0, Dirichlet
    kOnPhiMax = 2,   // y = 0, Dirichlet
    kOnSouth = 4,    // z = 0, Dirichlet
    kOnCap = 8,      // theta = theta_min rim around the pole, natural
};
constexpr std::uint8_t kDirichletMask = kOnPhiZero | kOnPhiMax | kOnSouth;

/// Triangulation of the (phi, theta) chart.
struct TriMesh {
    std::vector<Vec2> nodes;           // (phi, theta)
    std::vector<Triangle> triangles;   // counterclockwise in (phi, theta)
    std::vector<std::uint8_t> flags;
    double theta_min = 0.0;
    double min_quality = 0.0;          // radius ratio 2 r_in / r_circ
    double mean_quality = 0.0;

    std::size_t size() const { return nodes.size(); }
    bool is_dirichlet(std::size_t i) const { return (flags[i] & kDirichletMask) != 0; }
};

struct MeshSpec {
    int n_points = 1500;
    int n_iters = 100;
    double refinement = 3.0;      // edge length ratio interior : boundary
    double theta_min = 1e-3;      // pole cap radius
    std::uint64_t seed = 20111215;
    double quality_floor = 0.3;
};

/// Relative target edge length at (phi, theta).
using EdgeLengthFn = std::function<double(double, double)>;

/// h = 1 - (1 - 1/ratio) exp(-d/w), d = |signed_distance|, w = 0.1 x chart diagonal.
EdgeLengthFn edge_length_policy(const AngularDomain& domain, double ratio, double theta_min = 1e-3);

/// Level set of the chart {0 <= phi <= phi0, theta_min <= theta <= Theta(phi)}; negative inside.
double chart_level_set(const AngularDomain& domain, double theta_min, double phi, double theta);

/// Area of the chart region, by quadrature of Theta(phi) - theta_min.
double chart_area(const AngularDomain& domain, double theta_min);

/// Force-equilibrium (distmesh) mesh of the chart with Delaunay retriangulation.
TriMesh generate_mesh(const AngularDomain& domain, const MeshSpec& spec, EdgeLengthFn edge_fn = {});

/// Recomputes min/mean radius ratio.
void update_quality(TriMesh& mesh);

/// Nodes: "phi,theta,flags"; triangles: "i,j,k" (zero-based).
void write_mesh_csv(const TriMesh& mesh, std::ostream& nodes, std::ostream& triangles);
TriMesh read_mesh_csv(std::istream& nodes, std::istream& triangles, double theta_min);

} // namespace wxva
