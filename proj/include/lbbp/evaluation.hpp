#pragma once

#include <lbbp/correspondence.hpp>
#include <lbbp/mesh.hpp>

#include <Eigen/Core>

#include <filesystem>

namespace lbbp {

///
/// Normalised geodesic errors of a correspondence against ground truth,
/// error_i = d(corr(i), truth(i)) / sqrt(target area), with the cumulative
/// curve on thresholds 0.25 * j / 199, j = 0..199.
///
struct ErrorReport
{
    Eigen::VectorXd errors;
    Eigen::VectorXd thresholds;
    /// Fraction of vertices with error <= threshold.
    Eigen::VectorXd fractions;
    double fraction_exact = 0.0;
    double fraction_within_5pct = 0.0;
    double mean_error = 0.0;
    double max_error = 0.0;
};

constexpr int error_curve_points = 200;
constexpr double error_curve_max = 0.25;

ErrorReport geodesic_errors(const Correspondence& corr, const Correspondence& truth, const TriangleMesh& target);

/// Builds the curve and summary statistics from per-vertex errors.
ErrorReport summarize_errors(Eigen::VectorXd errors);

/// "threshold,fraction" rows, 17 significant digits.
void save_error_curve_csv(const std::filesystem::path& path, const ErrorReport& report);
void save_error_summary_json(const std::filesystem::path& path, const ErrorReport& report);

///
/// Log conformal factor u = 0.5 log(ring_src(i) / ring_tgt(truth(i))),
/// indexed by source vertex, where ring is the first-ring area. Positive u
/// means the source neighbourhood is larger, i.e. the target must be
/// stretched (w^2 = e^{2u} > 1) to match it.
///
Eigen::VectorXd ground_truth_conformal(const TriangleMesh& source, const TriangleMesh& target, const Correspondence& truth);

/// Pearson correlation of two equally long vectors.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

} // namespace lbbp
