#pragma once

#include <lbbp/mesh.hpp>

#include <Eigen/Core>

#include <vector>

namespace lbbp {

///
/// Approximate geodesic distances by Dijkstra on the edge graph, augmented
/// with one shortcut per interior edge: the straight segment between the two
/// opposite vertices after unfolding the edge's two faces into a plane, added
/// only when that segment crosses the shared edge.
///
/// The graph is built once; distance queries are const and thread-safe.
///
class GeodesicSolver
{
public:
    explicit GeodesicSolver(const TriangleMesh& mesh, bool unfolding_shortcuts = true);

    /// Distances from `source` to every vertex. Throws DisconnectedMesh if
    /// some vertex is unreachable.
    Eigen::VectorXd distances(VertexIndex source) const;

    int num_vertices() const { return static_cast<int>(m_offsets.size()) - 1; }

private:
    std::vector<int> m_offsets;
    std::vector<int> m_targets;
    std::vector<double> m_lengths;
};

Eigen::VectorXd geodesic_distance(const TriangleMesh& mesh, VertexIndex source);

} // namespace lbbp
