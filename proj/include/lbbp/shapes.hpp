#pragma once

#include <lbbp/mesh.hpp>

#include <functional>

namespace lbbp::shapes {

/// Single triangle (0,0,0), (1,0,0), (0,1,0). Open, so built with allow_boundary.
TriangleMesh unit_right_triangle();

/// Regular tetrahedron with the given edge length, outward oriented.
TriangleMesh regular_tetrahedron(double edge_length = 1.0);

/// Unit-sphere geodesic polyhedron: each icosahedron face split into
/// frequency^2 triangles and projected to the sphere. 10 f^2 + 2 vertices.
TriangleMesh icosphere(int frequency);

/// Icosphere by repeated 4-to-1 subdivision (subdivisions=3 gives 642 vertices).
TriangleMesh icosphere_subdivided(int subdivisions);

/// nx by ny vertex grid on [0, width] x [0, height] in the z=0 plane, open.
TriangleMesh flat_grid(int nx, int ny, double width = 1.0, double height = 1.0);

/// Moves every vertex radially: p -> radius(p) * p / |p|. Connectivity is preserved.
TriangleMesh radial_deform(const TriangleMesh& mesh, const std::function<double(const Eigen::Vector3d&)>& radius);

} // namespace lbbp::shapes
