#include <doctest.h>

#include "support.hpp"

#include <lbbp/errors.hpp>
#include <lbbp/geodesic.hpp>
#include <lbbp/sampling.hpp>

#include <algorithm>
#include <numeric>
#include <set>

using namespace lbbp;

TEST_CASE("collinear points pick the two endpoints")
{
    const std::vector<double> x = {0.0, 1.0, 2.0, 3.0};
    const DistanceField line = [&](int i) {
        Eigen::VectorXd d(4);
        for (int j = 0; j < 4; ++j) d(j) = std::abs(x[i] - x[j]);
        return d;
    };
    const std::vector<int> all = {0, 1, 2, 3};
    const FarthestPointResult result = farthest_point_order(all, 2, 0, line);
    std::vector<int> picked = result.order;
    std::sort(picked.begin(), picked.end());
    CHECK(picked == std::vector<int>{0, 3});
    CHECK(result.order.front() == 3);

    // Brute force over every pair: the endpoints uniquely maximise the separation.
    double best = -1.0;
    std::pair<int, int> arg;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            if (std::abs(x[a] - x[b]) > best) best = std::abs(x[a] - x[b]), arg = {a, b};
        }
    }
    CHECK(arg == std::pair{0, 3});
    CHECK(result.owner == std::vector<int>{0, 0, 3, 3});
}

TEST_CASE("greedy rule is followed step by step")
{
    const TriangleMesh mesh = shapes::icosphere(5);
    const GeodesicSolver solver(mesh);
    std::vector<int> all(mesh.num_vertices());
    std::iota(all.begin(), all.end(), 0);
    const DistanceField field = [&](int v) { return solver.distances(v); };
    const FarthestPointResult result = farthest_point_order(all, 12, 17, field);

    Eigen::VectorXd nearest = solver.distances(17);
    Eigen::Index expected = 0;
    nearest.maxCoeff(&expected);
    nearest.setConstant(std::numeric_limits<double>::infinity());
    for (int pick : result.order) {
        CHECK(pick == expected);
        nearest = nearest.cwiseMin(solver.distances(pick));
        nearest.maxCoeff(&expected);
    }
}

TEST_CASE("hierarchy")
{
    const TriangleMesh mesh = shapes::icosphere(6);
    const int n = mesh.num_vertices();
    const std::vector<int> counts = {n, 120, 40, 8};
    const SampleHierarchy h = farthest_point_sample(mesh, counts, 42);

    REQUIRE(h.levels.size() == counts.size());
    for (std::size_t l = 0; l < counts.size(); ++l) {
        CHECK(static_cast<int>(h.levels[l].size()) == counts[l]);
        CHECK(testing::relative_error(h.masses[l].sum(), mesh.surface_area()) < 1e-9);
        CHECK((h.masses[l].array() > 0.0).all());
        if (l > 0) {
            const std::set<int> parent(h.levels[l - 1].begin(), h.levels[l - 1].end());
            for (int v : h.levels[l]) CHECK(parent.count(v) == 1);
        }
    }
    std::vector<int> first = h.levels[0];
    std::sort(first.begin(), first.end());
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    CHECK(first == all);

    const SampleHierarchy again = farthest_point_sample(mesh, counts, 42);
    CHECK(again.levels == h.levels);
    for (std::size_t l = 0; l < counts.size(); ++l) CHECK(again.masses[l] == h.masses[l]);
}

TEST_CASE("single level is every vertex")
{
    const TriangleMesh mesh = shapes::icosphere(3);
    const std::vector<int> counts = {mesh.num_vertices()};
    const SampleHierarchy h = farthest_point_sample(mesh, counts, 1);
    REQUIRE(h.levels.size() == 1);
    CHECK(static_cast<int>(h.levels[0].size()) == mesh.num_vertices());
    CHECK((h.masses[0] - vertex_areas(mesh)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid level specifications")
{
    const TriangleMesh mesh = shapes::icosphere(3);
    const int n = mesh.num_vertices();
    CHECK_THROWS_AS(farthest_point_sample(mesh, std::vector<int>{n - 1, 10}, 0), InvalidLevelSpec);
    CHECK_THROWS_AS(farthest_point_sample(mesh, std::vector<int>{n, 10, 10}, 0), InvalidLevelSpec);
    CHECK_THROWS_AS(farthest_point_sample(mesh, std::vector<int>{n, 0}, 0), InvalidLevelSpec);
    CHECK_THROWS_AS(farthest_point_sample(mesh, std::vector<int>{}, 0), InvalidLevelSpec);
    CHECK_THROWS_AS(farthest_point_sample(mesh, std::vector<int>{n, 4}, 0, n), InvalidLevelSpec);
}
