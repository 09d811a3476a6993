#include <lbbp/errors.hpp>
#include <lbbp/features.hpp>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <unordered_set>

namespace lbbp {

const char* to_string(FeatureKind kind)
{
    switch (kind) {
    case FeatureKind::Indicator: return "indicator";
    case FeatureKind::HeatDiffusion: return "heat";
    }
    return "unknown";
}

namespace {

void validate_landmarks(int n, std::span<const int> landmarks)
{
    if (landmarks.empty()) throw EmptyFeatureSet("no landmarks given");
    std::unordered_set<int> seen;
    for (const int v : landmarks) {
        if (v < 0 || v >= n) {
            throw IndexOutOfRange("landmark " + std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
        }
        if (!seen.insert(v).second) throw DuplicateLandmark("landmark " + std::to_string(v) + " given twice");
    }
}

Eigen::MatrixXd spikes(int n, std::span<const int> landmarks)
{
    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(landmarks.size()));
    for (std::size_t j = 0; j < landmarks.size(); ++j) values(landmarks[j], static_cast<Eigen::Index>(j)) = 1.0;
    return values;
}

FeatureSet diffuse(
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    std::vector<int> landmarks,
    std::vector<int> steps,
    double dt,
    const std::optional<Eigen::VectorXd>& weight)
{
    if (steps.empty()) throw EmptyFeatureSet("no heat snapshot times");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] < 1 || (i > 0 && steps[i] <= steps[i - 1])) {
            throw ConfigError("heat snapshot steps must be positive and strictly ascending");
        }
    }
    const int n = static_cast<int>(mass.rows());
    const HeatStepper stepper(mass, stiffness, dt, weight);

    const Eigen::Index per = static_cast<Eigen::Index>(steps.size());
    FeatureSet out;
    out.kind = FeatureKind::HeatDiffusion;
    out.dt = dt;
    out.values.resize(n, static_cast<Eigen::Index>(landmarks.size()) * per);
    for (const int s : steps) out.times.push_back(s * dt);

    Eigen::MatrixXd u = spikes(n, landmarks);
    int done = 0;
    for (Eigen::Index j = 0; j < per; ++j) {
        for (; done < steps[static_cast<std::size_t>(j)]; ++done) u = stepper.step(u);
        for (Eigen::Index l = 0; l < u.cols(); ++l) out.values.col(l * per + j) = u.col(l);
    }
    out.landmarks = std::move(landmarks);
    return out;
}

} // namespace

FeatureSet indicator_features(const TriangleMesh& mesh, std::span<const int> landmarks)
{
    validate_landmarks(mesh.num_vertices(), landmarks);
    FeatureSet out;
    out.kind = FeatureKind::Indicator;
    out.values = spikes(mesh.num_vertices(), landmarks);
    out.landmarks.assign(landmarks.begin(), landmarks.end());
    return out;
}

FeatureSet heat_features(
    const TriangleMesh& mesh,
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    std::span<const int> landmarks,
    const HeatFeatureOptions& options)
{
    validate_landmarks(mesh.num_vertices(), landmarks);
    const double dt = options.dt.value_or(1e-3 * mesh.surface_area());
    return diffuse(mass, stiffness, {landmarks.begin(), landmarks.end()}, options.steps, dt, options.weight);
}

FeatureSet recompute_heat_features(
    const FeatureSet& features,
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    const Eigen::VectorXd& weight)
{
    if (features.kind != FeatureKind::HeatDiffusion) return features;
    std::vector<int> steps;
    for (const double t : features.times) steps.push_back(static_cast<int>(std::lround(t / features.dt)));
    return diffuse(mass, stiffness, features.landmarks, std::move(steps), features.dt, weight);
}

void save_features_csv(const std::filesystem::path& path, const FeatureSet& features)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << std::setprecision(17);
    for (Eigen::Index r = 0; r < features.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < features.values.cols(); ++c) {
            if (c) out << ',';
            out << features.values(r, c);
        }
        out << '\n';
    }
}

Eigen::MatrixXd DiffusionBasis::project(const Eigen::MatrixXd& f) const
{
    if (f.rows() != u.rows()) throw DimensionMismatch("projected function has the wrong length");
    return mass_gram_factor.solve(Eigen::MatrixXd(u.transpose() * (mass_weight.asDiagonal() * f)));
}

Eigen::MatrixXd DiffusionBasis::reconstruct(const Eigen::MatrixXd& coefficients) const
{
    if (coefficients.rows() != u.cols()) throw DimensionMismatch("coefficient count differs from basis size");
    return u * coefficients;
}

DiffusionBasis build_diffusion_basis(
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    const SampleHierarchy& hierarchy,
    int level,
    const DiffusionBasisOptions& options)
{
    if (level < 0 || level >= static_cast<int>(hierarchy.levels.size())) {
        throw InvalidLevelSpec("hierarchy has no level " + std::to_string(level));
    }
    const std::vector<int>& centers = hierarchy.levels[static_cast<std::size_t>(level)];
    const int n = static_cast<int>(mass.rows());
    const int nbar = static_cast<int>(centers.size());
    const double time = options.time.value_or(mass.diagonal().sum() / (4.0 * nbar));
    if (time < 0.0) throw ConfigError("diffusion time must be nonnegative");

    Eigen::MatrixXd bumps = spikes(n, centers);
    if (time > 0.0) {
        const int substeps = std::max(1, options.substeps);
        const HeatStepper stepper(mass, stiffness, time / substeps);
        for (int s = 0; s < substeps; ++s) bumps = stepper.step(bumps);
        // Crank-Nicolson may undershoot slightly near the spike.
        bumps = bumps.cwiseMax(0.0);
        for (Eigen::Index c = 0; c < bumps.cols(); ++c) {
            const double cutoff = options.drop_tolerance * bumps.col(c).maxCoeff();
            bumps.col(c) = (bumps.col(c).array() < cutoff).select(0.0, bumps.col(c));
        }
        const Eigen::VectorXd row_sums = bumps.rowwise().sum();
        if ((row_sums.array() <= 0.0).any()) {
            throw IllConditionedGram("some vertices are not covered by any heat bump; increase the diffusion time");
        }
        bumps = row_sums.cwiseInverse().asDiagonal() * bumps;
    }

    DiffusionBasis basis;
    basis.centers = centers;
    basis.time = time;
    basis.mass_weight = mass.diagonal();
    basis.u = bumps.sparseView();
    basis.u.makeCompressed();
    basis.mass_gram = Eigen::MatrixXd(basis.u.transpose() * mass.diagonal().asDiagonal() * basis.u);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(basis.mass_gram, Eigen::EigenvaluesOnly);
    const double lo = spectrum.eigenvalues().minCoeff();
    const double hi = spectrum.eigenvalues().maxCoeff();
    basis.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    spdlog::debug("diffusion basis: nbar={} t={:.3e} cond(u^T M u)={:.3e}", nbar, time, basis.condition);
    if (!(basis.condition <= options.max_condition)) {
        throw IllConditionedGram("cond(u^T M u) = " + std::to_string(basis.condition));
    }
    basis.mass_gram_factor.compute(basis.mass_gram);
    if (basis.mass_gram_factor.info() != Eigen::Success) throw IllConditionedGram("Gram factorisation failed");
    return basis;
}

} // namespace lbbp
