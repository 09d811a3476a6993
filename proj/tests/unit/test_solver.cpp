#include <doctest.h>

#include "support.hpp"

#include <lbbp/errors.hpp>
#include <lbbp/sampling.hpp>
#include <lbbp/solver.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace lbbp;

namespace {

LbbpConfig small_config(int k, int iterations)
{
    LbbpConfig config;
    config.k = k;
    config.max_outer_iterations = iterations;
    config.seed = 5;
    config.warm_start.enabled = false;
    return config;
}

/// Sphere pair without rotational symmetry, so every eigenvalue is simple.
testing::SpherePair bumpy_pair(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const Eigen::VectorXd noise = testing::random_matrix(rng, shapes::icosphere(4).num_vertices(), 1);
    TriangleMesh source = shapes::radial_deform(shapes::icosphere(4), [&, i = 0](const Eigen::Vector3d&) mutable {
        return 20.0 * (1.0 + 0.03 * noise(i++));
    });
    TriangleMesh target = shapes::radial_deform(source, [](const Eigen::Vector3d& p) { return p.norm() * std::exp(0.3 * p.normalized().z()); });
    return {std::move(source), std::move(target)};
}

} // namespace

TEST_CASE("descent, orthonormality and square summability")
{
    const auto pair = testing::deformed_sphere_pair(4, 20.0, 0.3);
    LbbpConfig config = small_config(8, 500);
    config.energy_tolerance = 0.0;
    config.reinit.max_count = 0;
    const SolverInputs inputs = prepare_inputs(pair.source, pair.target, testing::identity_landmarks(162, 12, 1), config);
    const LbbpResult result = solve_from(inputs, inputs.initial_iterate(), config);
    const LbbpState& state = result.state;

    REQUIRE(state.iterations == 500);
    CHECK(state.max_iterations_exceeded());
    CHECK(state.max_descent_gap <= 1e-9);
    CHECK(state.max_orthonormality_error <= 1e-8);
    CHECK(state.trace.back().energy.total < state.trace.front().energy.total);
    CHECK((state.w.array() > config.w_floor).all());

    double total = 0.0, tail = 0.0;
    for (std::size_t j = 1; j < state.trace.size(); ++j) {
        total += state.trace[j].proximal;
        if (j + 50 >= state.trace.size()) tail += state.trace[j].proximal;
    }
    CHECK(std::isfinite(total));
    CHECK(tail <= 0.01 * total);

    // Psi* is orthonormal in the deformed metric.
    const Eigen::VectorXd m = inputs.target_mass.diagonal();
    const Eigen::MatrixXd gram = result.psi_star.transpose() * (state.w.array().square() * m.array()).matrix().asDiagonal() * result.psi_star;
    CHECK((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("basis recovery")
{
    std::mt19937_64 rng(2);
    const int n = 30;
    const Eigen::VectorXd w = (0.3 * testing::random_matrix(rng, n, 1)).array().exp();
    const Eigen::VectorXd m = (0.2 * testing::random_matrix(rng, n, 1)).array().exp();
    const Eigen::MatrixXd psibar = orthonormalize(testing::random_matrix(rng, n, 4));
    const Eigen::MatrixXd inverse = recover_basis(w, psibar, m);
    const Eigen::MatrixXd literal = recover_basis(w, psibar, m, true);
    for (int i = 0; i < n; ++i) {
        CHECK((inverse.row(i) * w(i) * std::sqrt(m(i)) - psibar.row(i)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((literal.row(i) * std::sqrt(m(i)) / w(i) - psibar.row(i)).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK_THROWS_AS(recover_basis(w.head(5), psibar, m), DimensionMismatch);
}

TEST_CASE("delta-limit warm start reproduces the full problem")
{
    const auto pair = testing::deformed_sphere_pair(4, 20.0, 0.3);
    LbbpConfig config = small_config(8, 0);
    config.warm_start.samples = 162;
    config.warm_start.diffusion_time = 0.0;
    config.warm_start.iterations = 40;
    const SolverInputs inputs = prepare_inputs(pair.source, pair.target, testing::identity_landmarks(162, 12, 2), config);
    const Iterate start = inputs.initial_iterate();
    const WarmStart warm = warm_start(inputs, start, config);
    CHECK(warm.samples == 162);

    // The full run starts from the same lifted point: the trajectories are
    // sensitive enough that even last-bit differences in the start grow.
    const SampleHierarchy h = farthest_point_sample(*inputs.target_mesh, std::vector<int>{162}, *config.seed);
    DiffusionBasisOptions delta;
    delta.time = 0.0;
    const DiffusionBasis basis = build_diffusion_basis(inputs.target_mass, inputs.target_stiffness, h, 0, delta);
    const Coordinates reduced(basis.u);
    PamOptions options;
    options.max_iterations = 40;
    options.allow_reinit = false;
    const LbbpState cold = run_pam(inputs.problem(), Coordinates(162), reduced.psibar(reduced.fit_psibar(start.psibar)),
                                   reduced.w(basis.project(start.w).col(0)), start.multiplier, config, options);

    REQUIRE(warm.reduced.trace.size() == cold.trace.size());
    for (std::size_t j = 0; j < cold.trace.size(); ++j) {
        CHECK(testing::relative_error(warm.reduced.trace[j].energy.total, cold.trace[j].energy.total) < 1e-6);
    }
}

TEST_CASE("warm start improves the starting energy")
{
    const auto pair = testing::deformed_sphere_pair(4, 20.0, 0.3);
    LbbpConfig config = small_config(8, 0);
    config.warm_start.iterations = 60;
    const SolverInputs inputs = prepare_inputs(pair.source, pair.target, testing::identity_landmarks(162, 12, 3), config);
    const Iterate start = inputs.initial_iterate();
    const WarmStart warm = warm_start(inputs, start, config);
    CHECK(warm.samples == std::max(3 * 8, 162 / 6));
    CHECK(warm.reduced.max_descent_gap <= 1e-9);
    const double before = energy(inputs.problem(), start.w, start.psibar, config.weights).total;
    const double after = energy(inputs.problem(), warm.iterate.w, warm.iterate.psibar, config.weights).total;
    CHECK(after < before);
    CHECK(orthonormality_error(warm.iterate.psibar) < 1e-10);

    config.warm_start.samples = 5;
    CHECK_THROWS_AS(warm_start(inputs, start, config), InvalidLevelSpec);
}

TEST_CASE("rigid motions do not change the solve")
{
    const auto pair = bumpy_pair(4);
    const Eigen::Matrix3d rot_a = Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 1, 0).normalized()).toRotationMatrix();
    const Eigen::Matrix3d rot_b = Eigen::AngleAxisd(2.1, Eigen::Vector3d(0, 1, 3).normalized()).toRotationMatrix();
    const TriangleMesh source = transformed(pair.source, rot_a, Eigen::Vector3d(5, 0, 1));
    const TriangleMesh target = transformed(pair.target, rot_b, Eigen::Vector3d(-3, 7, 2));

    LbbpConfig config = small_config(6, 4);
    config.energy_tolerance = 0.0;
    const IndexPairs landmarks = testing::identity_landmarks(162, 10, 4);
    const SolverInputs in_a = prepare_inputs(pair.source, pair.target, landmarks, config);
    const SolverInputs in_b = prepare_inputs(source, target, landmarks, config);
    // Every operator is intrinsic: only coordinate rounding differs.
    CHECK((in_a.phi - in_b.phi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((in_a.psi0 - in_b.psi0).cwiseAbs().maxCoeff() < 1e-10);

    // Rounding-level differences are amplified by the step-size rules after a
    // handful of iterations, so only the first steps are compared.
    const LbbpResult a = solve(in_a, config);
    const LbbpResult b = solve(in_b, config);
    REQUIRE(a.state.trace.size() == b.state.trace.size());
    for (std::size_t j = 0; j < a.state.trace.size(); ++j) {
        CHECK(testing::relative_error(a.state.trace[j].energy.total, b.state.trace[j].energy.total) < 1e-7);
    }
    CHECK((a.state.w - b.state.w).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("reinitialisation mechanics")
{
    const auto pair = testing::deformed_sphere_pair(4, 20.0, 0.3);
    LbbpConfig config = small_config(8, 120);
    config.energy_tolerance = 0.0;
    config.reinit.tolerance = 1e-2;
    config.reinit.max_count = 3;
    config.reinit.min_gap = 15;
    const SolverInputs inputs = prepare_inputs(pair.source, pair.target, testing::identity_landmarks(162, 12, 5), config);
    const LbbpState state = solve_from(inputs, inputs.initial_iterate(), config).state;

    std::vector<int> at;
    for (const TraceRow& row : state.trace) {
        if (row.reinitialized) at.push_back(row.iter);
    }
    CHECK(state.reinit_count == 3);
    REQUIRE(at.size() == 3);
    CHECK(at[0] >= 15);
    for (std::size_t i = 1; i < at.size(); ++i) CHECK(at[i] - at[i - 1] >= 15);
    CHECK(state.max_orthonormality_error <= 1e-8);
    CHECK(state.max_descent_gap <= 1e-9);
}

TEST_CASE("heat features run through the solver")
{
    const auto pair = testing::deformed_sphere_pair(4, 20.0, 0.3);
    LbbpConfig config = small_config(6, 20);
    config.features = FeatureKind::HeatDiffusion;
    config.reinit.tolerance = 1e-1;
    config.reinit.min_gap = 5;
    const SolverInputs inputs = prepare_inputs(pair.source, pair.target, testing::identity_landmarks(162, 6, 6), config);
    CHECK(inputs.source_features.cols() == 18);
    CHECK(inputs.source_features.dt == inputs.target_features.dt);
    const LbbpState state = solve_from(inputs, inputs.initial_iterate(), config).state;
    CHECK(state.max_descent_gap <= 1e-9);
    CHECK(state.reinit_count >= 1);
}

TEST_CASE("bad inputs")
{
    const auto pair = testing::deformed_sphere_pair(2, 1.0, 0.3);
    LbbpConfig config = small_config(41, 10);
    CHECK_THROWS_AS(prepare_inputs(pair.source, pair.target, testing::identity_landmarks(42, 3, 0), config), InvalidK);
    config.k = 4;
    CHECK_THROWS_AS(prepare_inputs(pair.source, pair.target, {}, config), EmptyFeatureSet);
    CHECK_THROWS_AS(prepare_inputs(pair.source, pair.target, {{0, 1}, {2, 1}}, config), DuplicateLandmark);
    config.k = 0;
    CHECK_THROWS_AS(prepare_inputs(pair.source, pair.target, testing::identity_landmarks(42, 3, 0), config), ConfigError);
}

TEST_CASE("config round trip and validation")
{
    LbbpConfig config;
    config.k = 17;
    config.eta = 0.25;
    config.seed = 99;
    config.features = FeatureKind::HeatDiffusion;
    config.heat.steps = {2, 4};
    config.warm_start.diffusion_time = 1.5;
    const nlohmann::json j = config;
    const LbbpConfig back = j.get<LbbpConfig>();
    CHECK(nlohmann::json(back) == j);
    CHECK(back.k == 17);
    CHECK(back.effective_eta() == 0.25);
    CHECK(LbbpConfig{}.effective_eta() == doctest::Approx(10.0 / 21.0));

    CHECK_THROWS_AS(nlohmann::json({{"kk", 3}}).get<LbbpConfig>(), ConfigError);
    CHECK_THROWS_AS(nlohmann::json({{"reinit", {{"tolerence", 1}}}}).get<LbbpConfig>(), ConfigError);
    CHECK_THROWS_AS(nlohmann::json({{"k", "ten"}}).get<LbbpConfig>(), ConfigError);
    CHECK_THROWS_AS(nlohmann::json({{"features", {{"kind", "wks"}}}}).get<LbbpConfig>(), ConfigError);

    LbbpConfig bad;
    bad.weights.r2 = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.eta = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_NOTHROW(LbbpConfig{}.validate());

    const auto path = std::filesystem::temp_directory_path() / "lbbp_unit" / "config.json";
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path) << j.dump(2);
    CHECK(nlohmann::json(load_config(path)) == j);
    CHECK_THROWS_AS(load_config(path.parent_path() / "missing.json"), IoError);
}

TEST_CASE("trace CSV")
{
    std::vector<TraceRow> trace(3);
    for (int i = 0; i < 3; ++i) {
        trace[i].iter = i;
        trace[i].energy.total = 1.0 / (i + 3.0);
    }
    const auto path = std::filesystem::temp_directory_path() / "lbbp_unit" / "trace.csv";
    std::filesystem::create_directories(path.parent_path());
    save_trace_csv(path, trace);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "iter,coeff,eigen,harmonic,area_residual,total");
    std::getline(in, row);
    CHECK(row == "0,0,0,0,0,0.33333333333333331");
}
