#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace lbbp {

using VertexIndex = int;
using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct MeshOptions
{
    /// Accept open surfaces. Closed edge-manifold input is required otherwise.
    bool allow_boundary = false;
};

/// Undirected edge (v0 < v1) with the vertices opposite to it in its one or two faces.
struct Edge
{
    VertexIndex v0 = -1;
    VertexIndex v1 = -1;
    std::array<VertexIndex, 2> opposite = {-1, -1};

    bool is_boundary() const { return opposite[1] < 0; }
};

///
/// Immutable, validated triangle mesh with one-ring and edge adjacency.
///
/// Construction rejects out-of-range indices, degenerate faces (area below
/// 1e-12 times the squared bounding-box diagonal), non-manifold or
/// inconsistently oriented edges, and boundary edges unless allowed.
///
class TriangleMesh
{
public:
    TriangleMesh(Vertices vertices, Faces faces, MeshOptions options = {});

    int num_vertices() const { return static_cast<int>(m_vertices.rows()); }
    int num_faces() const { return static_cast<int>(m_faces.rows()); }
    int num_edges() const { return static_cast<int>(m_edges.size()); }

    const Vertices& vertices() const { return m_vertices; }
    const Faces& faces() const { return m_faces; }
    const std::vector<Edge>& edges() const { return m_edges; }

    Eigen::Vector3d position(VertexIndex v) const { return m_vertices.row(v).transpose(); }

    /// Faces incident to vertex v (its first ring).
    std::span<const int> vertex_faces(VertexIndex v) const;
    /// Vertices sharing an edge with v, ascending.
    std::span<const int> vertex_neighbors(VertexIndex v) const;

    const Eigen::VectorXd& face_areas() const { return m_face_areas; }
    double surface_area() const { return m_surface_area; }
    double bounding_box_diagonal() const;
    bool has_boundary() const { return m_has_boundary; }
    const MeshOptions& options() const { return m_options; }

    /// Edges whose opposite angles sum above pi (informational only).
    int count_non_delaunay_edges() const;

    /// Rebuilds adjacency from the face list and compares with the stored one.
    bool adjacency_consistent() const;

private:
    void build_adjacency();

    Vertices m_vertices;
    Faces m_faces;
    MeshOptions m_options;

    std::vector<int> m_vf_offsets;
    std::vector<int> m_vf_faces;
    std::vector<int> m_vv_offsets;
    std::vector<int> m_vv_neighbors;
    std::vector<Edge> m_edges;

    Eigen::VectorXd m_face_areas;
    double m_surface_area = 0.0;
    bool m_has_boundary = false;
};

/// Area of the triangle (a, b, c).
double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c);

/// Per-vertex lumped area: one third of the total area of the first ring.
Eigen::VectorXd vertex_areas(const TriangleMesh& mesh);

/// Total area of the first ring around every vertex (three times vertex_areas).
Eigen::VectorXd first_ring_areas(const TriangleMesh& mesh);

/// Copy of the mesh with every vertex passed through an affine map x -> R x + t.
TriangleMesh transformed(const TriangleMesh& mesh, const Eigen::Matrix3d& linear, const Eigen::Vector3d& offset);

} // namespace lbbp
