#pragma once

#include <array>
#include <vector>

namespace wxva {

using Triangle = std::array<int, 3>;

/// Bowyer-Watson Delaunay triangulation of distinct points; triangles are counterclockwise.
std::vector<Triangle> delaunay_triangulate(const std::vector<std::array<double, 2>>& points);

/// > 0 if c lies left of a->b.
double orient2d(const std::array<double, 2>& a, const std::array<double, 2>& b, const std::array<double, 2>& c);

/// > 0 if d lies inside the circumcircle of the counterclockwise triangle abc.
double incircle(const std::array<double, 2>& a, const std::array<double, 2>& b, const std::array<double, 2>& c,
                const std::array<double, 2>& d);

} // namespace wxva
