#include <lbbp/errors.hpp>
#include <lbbp/mesh.hpp>

#include <spdlog/spdlog.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lbbp {

namespace {

struct HalfEdgeRecord
{
    std::uint64_t key;
    int opposite;
    bool forward;
};

std::uint64_t edge_key(int a, int b)
{
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (lo << 32) | hi;
}

double angle_at(const Eigen::Vector3d& apex, const Eigen::Vector3d& p, const Eigen::Vector3d& q)
{
    const Eigen::Vector3d u = p - apex;
    const Eigen::Vector3d v = q - apex;
    return std::atan2(u.cross(v).norm(), u.dot(v));
}

} // namespace

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c)
{
    return 0.5 * (b - a).cross(c - a).norm();
}

TriangleMesh::TriangleMesh(Vertices vertices, Faces faces, MeshOptions options)
    : m_vertices(std::move(vertices))
    , m_faces(std::move(faces))
    , m_options(options)
{
    const int n = num_vertices();
    const int t = num_faces();
    if (n == 0 || t == 0) {
        throw TopologyError("mesh has no vertices or no faces");
    }
    for (int f = 0; f < t; ++f) {
        for (int c = 0; c < 3; ++c) {
            const int v = m_faces(f, c);
            if (v < 0 || v >= n) {
                throw IndexOutOfRange(
                    "face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                    " but the mesh has " + std::to_string(n) + " vertices");
            }
        }
        if (m_faces(f, 0) == m_faces(f, 1) || m_faces(f, 1) == m_faces(f, 2) ||
            m_faces(f, 0) == m_faces(f, 2)) {
            throw TopologyError("face " + std::to_string(f) + " repeats a vertex");
        }
    }

    const double diag = bounding_box_diagonal();
    const double min_area = 1e-12 * diag * diag;
    m_face_areas.resize(t);
    for (int f = 0; f < t; ++f) {
        m_face_areas[f] = triangle_area(position(m_faces(f, 0)), position(m_faces(f, 1)), position(m_faces(f, 2)));
        if (!(m_face_areas[f] > min_area)) {
            throw TopologyError("degenerate face " + std::to_string(f));
        }
    }
    m_surface_area = m_face_areas.sum();

    build_adjacency();

    for (int v = 0; v < n; ++v) {
        if (vertex_faces(v).empty()) {
            throw TopologyError("vertex " + std::to_string(v) + " is not referenced by any face");
        }
    }

    const int non_delaunay = count_non_delaunay_edges();
    if (non_delaunay > 0) {
        spdlog::debug("mesh has {} non-Delaunay edges out of {}", non_delaunay, num_edges());
    }
}

void TriangleMesh::build_adjacency()
{
    const int n = num_vertices();
    const int t = num_faces();

    m_vf_offsets.assign(n + 1, 0);
    for (int f = 0; f < t; ++f) {
        for (int c = 0; c < 3; ++c) ++m_vf_offsets[m_faces(f, c) + 1];
    }
    for (int v = 0; v < n; ++v) m_vf_offsets[v + 1] += m_vf_offsets[v];
    m_vf_faces.assign(m_vf_offsets[n], -1);
    {
        std::vector<int> cursor(m_vf_offsets.begin(), m_vf_offsets.end() - 1);
        for (int f = 0; f < t; ++f) {
            for (int c = 0; c < 3; ++c) m_vf_faces[cursor[m_faces(f, c)]++] = f;
        }
    }

    std::vector<HalfEdgeRecord> records;
    records.reserve(3 * static_cast<std::size_t>(t));
    for (int f = 0; f < t; ++f) {
        for (int c = 0; c < 3; ++c) {
            const int a = m_faces(f, c);
            const int b = m_faces(f, (c + 1) % 3);
            const int o = m_faces(f, (c + 2) % 3);
            records.push_back({edge_key(a, b), o, a < b});
        }
    }
    std::sort(records.begin(), records.end(), [](const HalfEdgeRecord& x, const HalfEdgeRecord& y) {
        return x.key < y.key || (x.key == y.key && x.opposite < y.opposite);
    });

    m_edges.clear();
    m_has_boundary = false;
    for (std::size_t i = 0; i < records.size();) {
        std::size_t j = i;
        while (j < records.size() && records[j].key == records[i].key) ++j;
        const std::size_t count = j - i;
        Edge e;
        e.v0 = static_cast<int>(records[i].key >> 32);
        e.v1 = static_cast<int>(records[i].key & 0xffffffffu);
        if (count > 2) {
            throw TopologyError(
                "non-manifold edge (" + std::to_string(e.v0) + ", " + std::to_string(e.v1) + ") shared by " +
                std::to_string(count) + " faces");
        }
        e.opposite[0] = records[i].opposite;
        if (count == 2) {
            if (records[i].forward == records[i + 1].forward) {
                throw TopologyError(
                    "inconsistently oriented faces across edge (" + std::to_string(e.v0) + ", " +
                    std::to_string(e.v1) + ")");
            }
            e.opposite[1] = records[i + 1].opposite;
        } else {
            m_has_boundary = true;
            if (!m_options.allow_boundary) {
                throw TopologyError(
                    "boundary edge (" + std::to_string(e.v0) + ", " + std::to_string(e.v1) +
                    "); open surfaces require allow_boundary");
            }
        }
        m_edges.push_back(e);
        i = j;
    }

    m_vv_offsets.assign(n + 1, 0);
    for (const Edge& e : m_edges) {
        ++m_vv_offsets[e.v0 + 1];
        ++m_vv_offsets[e.v1 + 1];
    }
    for (int v = 0; v < n; ++v) m_vv_offsets[v + 1] += m_vv_offsets[v];
    m_vv_neighbors.assign(m_vv_offsets[n], -1);
    std::vector<int> cursor(m_vv_offsets.begin(), m_vv_offsets.end() - 1);
    for (const Edge& e : m_edges) {
        m_vv_neighbors[cursor[e.v0]++] = e.v1;
        m_vv_neighbors[cursor[e.v1]++] = e.v0;
    }
    for (int v = 0; v < n; ++v) {
        std::sort(m_vv_neighbors.begin() + m_vv_offsets[v], m_vv_neighbors.begin() + m_vv_offsets[v + 1]);
    }
}

std::span<const int> TriangleMesh::vertex_faces(VertexIndex v) const
{
    return {m_vf_faces.data() + m_vf_offsets[v], static_cast<std::size_t>(m_vf_offsets[v + 1] - m_vf_offsets[v])};
}

std::span<const int> TriangleMesh::vertex_neighbors(VertexIndex v) const
{
    return {
        m_vv_neighbors.data() + m_vv_offsets[v],
        static_cast<std::size_t>(m_vv_offsets[v + 1] - m_vv_offsets[v])};
}

double TriangleMesh::bounding_box_diagonal() const
{
    return (m_vertices.colwise().maxCoeff() - m_vertices.colwise().minCoeff()).norm();
}

int TriangleMesh::count_non_delaunay_edges() const
{
    int count = 0;
    for (const Edge& e : m_edges) {
        if (e.is_boundary()) continue;
        const Eigen::Vector3d p0 = position(e.v0);
        const Eigen::Vector3d p1 = position(e.v1);
        const double alpha = angle_at(position(e.opposite[0]), p0, p1);
        const double beta = angle_at(position(e.opposite[1]), p0, p1);
        if (alpha + beta > std::numbers::pi + 1e-12) ++count;
    }
    return count;
}

bool TriangleMesh::adjacency_consistent() const
{
    for (int v = 0; v < num_vertices(); ++v) {
        std::vector<int> expected;
        for (int f = 0; f < num_faces(); ++f) {
            if (m_faces(f, 0) == v || m_faces(f, 1) == v || m_faces(f, 2) == v) expected.push_back(f);
        }
        const auto stored = vertex_faces(v);
        std::vector<int> sorted(stored.begin(), stored.end());
        std::sort(sorted.begin(), sorted.end());
        if (sorted != expected) return false;

        std::vector<int> ring;
        for (int f : expected) {
            for (int c = 0; c < 3; ++c) {
                if (m_faces(f, c) != v) ring.push_back(m_faces(f, c));
            }
        }
        std::sort(ring.begin(), ring.end());
        ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
        const auto neighbors = vertex_neighbors(v);
        if (!std::equal(ring.begin(), ring.end(), neighbors.begin(), neighbors.end())) return false;
    }
    return true;
}

Eigen::VectorXd first_ring_areas(const TriangleMesh& mesh)
{
    Eigen::VectorXd ring = Eigen::VectorXd::Zero(mesh.num_vertices());
    const auto& faces = mesh.faces();
    const auto& areas = mesh.face_areas();
    for (int f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) ring[faces(f, c)] += areas[f];
    }
    return ring;
}

Eigen::VectorXd vertex_areas(const TriangleMesh& mesh)
{
    return first_ring_areas(mesh) / 3.0;
}

TriangleMesh transformed(const TriangleMesh& mesh, const Eigen::Matrix3d& linear, const Eigen::Vector3d& offset)
{
    Vertices moved = (mesh.vertices() * linear.transpose()).rowwise() + offset.transpose();
    return TriangleMesh(std::move(moved), mesh.faces(), mesh.options());
}

} // namespace lbbp
