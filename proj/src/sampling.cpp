#include <lbbp/errors.hpp>
#include <lbbp/geodesic.hpp>
#include <lbbp/mesh.hpp>
#include <lbbp/sampling.hpp>

#include <limits>
#include <random>
#include <string>

namespace lbbp {

FarthestPointResult farthest_point_order(
    std::span<const int> candidates,
    int count,
    int start,
    const DistanceField& distances_from)
{
    if (count < 1 || count > static_cast<int>(candidates.size())) {
        throw InvalidLevelSpec(
            "cannot pick " + std::to_string(count) + " of " + std::to_string(candidates.size()) + " candidates");
    }
    auto argmax_over_candidates = [&](const Eigen::VectorXd& score, const std::vector<char>& taken) {
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const int p = candidates[c];
            if (taken[c]) continue;
            if (best < 0 || score[p] > best_score || (score[p] == best_score && p < candidates[best])) {
                best = static_cast<int>(c);
                best_score = score[p];
            }
        }
        return best;
    };

    std::vector<char> taken(candidates.size(), 0);
    FarthestPointResult result;
    const Eigen::VectorXd from_start = distances_from(start);
    int pick = argmax_over_candidates(from_start, taken);

    Eigen::VectorXd min_dist = distances_from(candidates[pick]);
    result.owner.assign(static_cast<std::size_t>(min_dist.size()), candidates[pick]);
    result.order.push_back(candidates[pick]);
    taken[pick] = 1;

    while (static_cast<int>(result.order.size()) < count) {
        pick = argmax_over_candidates(min_dist, taken);
        const int p = candidates[pick];
        taken[pick] = 1;
        result.order.push_back(p);
        const Eigen::VectorXd d = distances_from(p);
        for (Eigen::Index x = 0; x < d.size(); ++x) {
            if (d[x] < min_dist[x] || (d[x] == min_dist[x] && p < result.owner[x])) {
                min_dist[x] = d[x];
                result.owner[x] = p;
            }
        }
    }
    return result;
}

SampleHierarchy farthest_point_sample(
    const TriangleMesh& mesh,
    std::span<const int> counts,
    std::uint64_t seed,
    std::optional<VertexIndex> start_vertex)
{
    const int n = mesh.num_vertices();
    if (counts.empty() || counts[0] != n) {
        throw InvalidLevelSpec("counts[0] must equal the vertex count " + std::to_string(n));
    }
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] >= counts[i - 1] || counts[i] < 1) {
            throw InvalidLevelSpec("level sizes must be strictly decreasing and positive");
        }
    }
    if (start_vertex && (*start_vertex < 0 || *start_vertex >= n)) {
        throw InvalidLevelSpec("start vertex out of range");
    }

    const Eigen::VectorXd areas = vertex_areas(mesh);
    SampleHierarchy hierarchy;
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) all[v] = v;
    hierarchy.levels.push_back(all);
    hierarchy.masses.push_back(areas);
    if (counts.size() == 1) return hierarchy;

    const GeodesicSolver geodesics(mesh);
    std::mt19937_64 rng(seed);
    const DistanceField field = [&](int v) { return geodesics.distances(v); };

    for (std::size_t level = 1; level < counts.size(); ++level) {
        const std::vector<int>& parent = hierarchy.levels.back();
        std::uniform_int_distribution<std::size_t> pick(0, parent.size() - 1);
        const int start = start_vertex ? *start_vertex : parent[pick(rng)];
        const FarthestPointResult fps = farthest_point_order(parent, counts[level], start, field);

        Eigen::VectorXd mass = Eigen::VectorXd::Zero(counts[level]);
        std::vector<int> slot(static_cast<std::size_t>(n), -1);
        for (std::size_t i = 0; i < fps.order.size(); ++i) slot[fps.order[i]] = static_cast<int>(i);
        for (int v = 0; v < n; ++v) mass[slot[fps.owner[v]]] += areas[v];

        hierarchy.levels.push_back(fps.order);
        hierarchy.masses.push_back(std::move(mass));
    }
    return hierarchy;
}

} // namespace lbbp
