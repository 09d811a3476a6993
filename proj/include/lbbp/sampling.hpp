#pragma once

#include <lbbp/mesh.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace lbbp {

///
/// Nested vertex subsets. levels[0] holds every vertex; each further level is
/// a strict subset of the previous one, listed in farthest-point order.
/// masses[l][i] is the area of the geodesic Voronoi cell of levels[l][i]
/// (every vertex area goes to its nearest sample), so each level's masses sum
/// to the surface area.
///
struct SampleHierarchy
{
    std::vector<std::vector<VertexIndex>> levels;
    std::vector<Eigen::VectorXd> masses;
};

/// Distances from one point to every point of the ambient set.
using DistanceField = std::function<Eigen::VectorXd(int)>;

struct FarthestPointResult
{
    std::vector<int> order;
    /// Nearest selected point for every ambient point.
    std::vector<int> owner;
};

///
/// Greedy farthest-point selection of `count` points among `candidates`.
/// The first pick is the candidate farthest from `start`; every further pick
/// maximises the minimum distance to the picks so far. Ties go to the lowest
/// index.
///
FarthestPointResult farthest_point_order(
    std::span<const int> candidates,
    int count,
    int start,
    const DistanceField& distances_from);

/// Builds the hierarchy for strictly decreasing `counts` with counts[0] == n.
/// The start vertex of each level is drawn from `seed` unless given explicitly.
SampleHierarchy farthest_point_sample(
    const TriangleMesh& mesh,
    std::span<const int> counts,
    std::uint64_t seed,
    std::optional<VertexIndex> start_vertex = std::nullopt);

} // namespace lbbp
