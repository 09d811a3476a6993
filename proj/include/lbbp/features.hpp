#pragma once

#include <lbbp/fem.hpp>
#include <lbbp/mesh.hpp>
#include <lbbp/sampling.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace lbbp {

enum class FeatureKind { Indicator, HeatDiffusion };

const char* to_string(FeatureKind kind);

///
/// Corresponding feature functions, one per column. Heat columns are ordered
/// landmark-major: column i * times.size() + j is landmark i at times[j].
///
struct FeatureSet
{
    FeatureKind kind = FeatureKind::Indicator;
    Eigen::MatrixXd values;
    std::vector<int> landmarks;
    std::vector<double> times;
    double dt = 0.0;

    int cols() const { return static_cast<int>(values.cols()); }
};

/// One unit spike per landmark. Throws EmptyFeatureSet, DuplicateLandmark, IndexOutOfRange.
FeatureSet indicator_features(const TriangleMesh& mesh, std::span<const int> landmarks);

struct HeatFeatureOptions
{
    /// Crank-Nicolson step; defaults to 1e-3 * surface area.
    std::optional<double> dt;
    /// Snapshot times as multiples of dt.
    std::vector<int> steps = {5, 10, 20};
    /// Per-vertex w^2 for the deformed metric.
    std::optional<Eigen::VectorXd> weight;
};

/// Heat diffusion snapshots from each landmark spike.
FeatureSet heat_features(
    const TriangleMesh& mesh,
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    std::span<const int> landmarks,
    const HeatFeatureOptions& options = {});

/// Recomputes `features` with the same landmarks and times under a new w^2.
FeatureSet recompute_heat_features(
    const FeatureSet& features,
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    const Eigen::VectorXd& weight);

/// n rows, one column per feature, 17 significant digits.
void save_features_csv(const std::filesystem::path& path, const FeatureSet& features);

///
/// Heat bumps centred at the samples of one hierarchy level, normalised to a
/// partition of unity, with the mass-weighted projection
///   Proj(f) = (u^T M u)^{-1} u^T M f,   Recon(c) = u c.
///
struct DiffusionBasis
{
    /// n x nbar, nonnegative, rows summing to one.
    SparseMatrix u;
    std::vector<int> centers;
    double time = 0.0;
    /// Diagonal of M.
    Eigen::VectorXd mass_weight;
    /// u^T M u and its Cholesky factor.
    Eigen::MatrixXd mass_gram;
    Eigen::LLT<Eigen::MatrixXd> mass_gram_factor;
    double condition = 1.0;

    int size() const { return static_cast<int>(u.cols()); }

    Eigen::MatrixXd project(const Eigen::MatrixXd& f) const;
    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& coefficients) const;
};

struct DiffusionBasisOptions
{
    /// Diffusion time; defaults to area / (4 nbar). Zero gives exact spikes.
    std::optional<double> time;
    int substeps = 8;
    /// Entries below this fraction of their column maximum are dropped.
    double drop_tolerance = 1e-10;
    /// IllConditionedGram above this condition number.
    double max_condition = 1e12;
};

DiffusionBasis build_diffusion_basis(
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    const SampleHierarchy& hierarchy,
    int level,
    const DiffusionBasisOptions& options = {});

} // namespace lbbp
