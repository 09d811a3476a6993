#include <lbbp/errors.hpp>
#include <lbbp/geodesic.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <tuple>

namespace lbbp {

namespace {

double angle_between(const Eigen::Vector3d& u, const Eigen::Vector3d& v)
{
    return std::atan2(u.cross(v).norm(), u.dot(v));
}

} // namespace

GeodesicSolver::GeodesicSolver(const TriangleMesh& mesh, bool unfolding_shortcuts)
{
    const int n = mesh.num_vertices();
    std::vector<std::tuple<int, int, double>> arcs;
    arcs.reserve(4 * static_cast<std::size_t>(mesh.num_edges()));

    for (const Edge& e : mesh.edges()) {
        const Eigen::Vector3d p0 = mesh.position(e.v0);
        const Eigen::Vector3d p1 = mesh.position(e.v1);
        const double len = (p1 - p0).norm();
        arcs.emplace_back(e.v0, e.v1, len);
        arcs.emplace_back(e.v1, e.v0, len);

        if (!unfolding_shortcuts || e.is_boundary()) continue;
        const Eigen::Vector3d a = mesh.position(e.opposite[0]);
        const Eigen::Vector3d b = mesh.position(e.opposite[1]);
        // Unfolded, the segment a-b crosses the edge iff the angles at both
        // edge endpoints sum below pi.
        const double at0 = angle_between(a - p0, p1 - p0) + angle_between(b - p0, p1 - p0);
        const double at1 = angle_between(a - p1, p0 - p1) + angle_between(b - p1, p0 - p1);
        if (at0 >= std::numbers::pi || at1 >= std::numbers::pi) continue;
        const double ra = (a - p0).norm();
        const double rb = (b - p0).norm();
        const double shortcut = std::sqrt(std::max(0.0, ra * ra + rb * rb - 2.0 * ra * rb * std::cos(at0)));
        arcs.emplace_back(e.opposite[0], e.opposite[1], shortcut);
        arcs.emplace_back(e.opposite[1], e.opposite[0], shortcut);
    }

    std::sort(arcs.begin(), arcs.end());
    m_offsets.assign(n + 1, 0);
    for (const auto& arc : arcs) ++m_offsets[std::get<0>(arc) + 1];
    for (int v = 0; v < n; ++v) m_offsets[v + 1] += m_offsets[v];
    m_targets.resize(arcs.size());
    m_lengths.resize(arcs.size());
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        m_targets[i] = std::get<1>(arcs[i]);
        m_lengths[i] = std::get<2>(arcs[i]);
    }
}

Eigen::VectorXd GeodesicSolver::distances(VertexIndex source) const
{
    const int n = num_vertices();
    if (source < 0 || source >= n) {
        throw IndexOutOfRange("geodesic source " + std::to_string(source) + " outside [0, " + std::to_string(n) + ")");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, inf);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (d > dist[v]) continue;
        for (int a = m_offsets[v]; a < m_offsets[v + 1]; ++a) {
            const double candidate = d + m_lengths[a];
            const int u = m_targets[a];
            if (candidate < dist[u]) {
                dist[u] = candidate;
                queue.emplace(candidate, u);
            }
        }
    }
    for (int v = 0; v < n; ++v) {
        if (dist[v] == inf) {
            throw DisconnectedMesh("vertex " + std::to_string(v) + " unreachable from " + std::to_string(source));
        }
    }
    return dist;
}

Eigen::VectorXd geodesic_distance(const TriangleMesh& mesh, VertexIndex source)
{
    return GeodesicSolver(mesh).distances(source);
}

} // namespace lbbp
