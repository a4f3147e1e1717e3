#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mkdepth/measures.hpp"

namespace mkdepth {

/// Planar convex hull by Andrew's monotone chain, counterclockwise, without
/// collinear points. Fewer than three distinct points come back as is
/// (deduplicated).
std::vector<Point> convex_hull(std::vector<Point> points);

/// Largest distance from the midpoint of a pair of hull vertices to the
/// nearest point of the set. Small for a densely sampled convex set, large
/// when the hull spans a hollow.
double convexity_gap(const std::vector<Point>& points);

using Triangle = std::array<std::size_t, 3>;

/// Delaunay triangulation (Bowyer-Watson). Duplicate points are ignored;
/// triangles index into the input and are counterclockwise.
std::vector<Triangle> delaunay(const std::vector<Point>& points);

/// Boundary of the alpha shape: Delaunay triangles with circumradius at
/// most alpha are kept, and edges used by exactly one kept triangle are
/// chained into closed loops. alpha is in the units of the data.
std::vector<std::vector<Point>> alpha_shape_boundary(const std::vector<Point>& points, double alpha);

}  // namespace mkdepth
