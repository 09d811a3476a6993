#include <lbbp/errors.hpp>
#include <lbbp/evaluation.hpp>
#include <lbbp/geodesic.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <string>
#include <vector>

namespace lbbp {

ErrorReport summarize_errors(Eigen::VectorXd errors)
{
    ErrorReport report;
    report.errors = std::move(errors);
    const Eigen::Index n = report.errors.size();
    std::vector<double> sorted(report.errors.data(), report.errors.data() + n);
    std::sort(sorted.begin(), sorted.end());

    report.thresholds.resize(error_curve_points);
    report.fractions.resize(error_curve_points);
    for (int j = 0; j < error_curve_points; ++j) {
        const double x = error_curve_max * j / (error_curve_points - 1);
        const auto count = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
        report.thresholds[j] = x;
        report.fractions[j] = n ? static_cast<double>(count) / static_cast<double>(n) : 1.0;
    }
    report.fraction_exact = report.fractions[0];
    const auto within = std::upper_bound(sorted.begin(), sorted.end(), 0.05) - sorted.begin();
    report.fraction_within_5pct = n ? static_cast<double>(within) / static_cast<double>(n) : 1.0;
    report.mean_error = n ? report.errors.mean() : 0.0;
    report.max_error = n ? sorted.back() : 0.0;
    return report;
}

ErrorReport geodesic_errors(const Correspondence& corr, const Correspondence& truth, const TriangleMesh& target)
{
    if (corr.size() != truth.size()) {
        throw DimensionMismatch("correspondence has " + std::to_string(corr.size()) + " entries, truth " +
                                std::to_string(truth.size()));
    }
    const int n = target.num_vertices();
    auto check = [n](int v) {
        if (v < 0 || v >= n) throw IndexOutOfRange("target vertex " + std::to_string(v) + " out of range");
    };
    // Group by ground-truth vertex so each geodesic field is computed once.
    std::map<int, std::vector<int>> by_truth;
    for (int i = 0; i < corr.size(); ++i) {
        check(corr.index_map[static_cast<std::size_t>(i)]);
        check(truth.index_map[static_cast<std::size_t>(i)]);
        if (corr.index_map[static_cast<std::size_t>(i)] != truth.index_map[static_cast<std::size_t>(i)]) {
            by_truth[truth.index_map[static_cast<std::size_t>(i)]].push_back(i);
        }
    }
    Eigen::VectorXd errors = Eigen::VectorXd::Zero(corr.size());
    if (!by_truth.empty()) {
        const GeodesicSolver solver(target);
        const double scale = 1.0 / std::sqrt(target.surface_area());
        for (const auto& [t, sources] : by_truth) {
            const Eigen::VectorXd d = solver.distances(t);
            for (const int i : sources) errors[i] = d[corr.index_map[static_cast<std::size_t>(i)]] * scale;
        }
    }
    return summarize_errors(std::move(errors));
}

void save_error_curve_csv(const std::filesystem::path& path, const ErrorReport& report)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << std::setprecision(17) << "threshold,fraction\n";
    for (Eigen::Index j = 0; j < report.thresholds.size(); ++j) {
        out << report.thresholds[j] << ',' << report.fractions[j] << '\n';
    }
}

void save_error_summary_json(const std::filesystem::path& path, const ErrorReport& report)
{
    const nlohmann::json j{
        {"vertices", report.errors.size()},
        {"fraction_exact", report.fraction_exact},
        {"fraction_within_0_05", report.fraction_within_5pct},
        {"mean_error", report.mean_error},
        {"max_error", report.max_error},
    };
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

Eigen::VectorXd ground_truth_conformal(const TriangleMesh& source, const TriangleMesh& target, const Correspondence& truth)
{
    if (truth.size() != source.num_vertices()) {
        throw DimensionMismatch("ground truth must map every source vertex");
    }
    const Eigen::VectorXd src = first_ring_areas(source);
    const Eigen::VectorXd tgt = first_ring_areas(target);
    Eigen::VectorXd u(source.num_vertices());
    for (int i = 0; i < source.num_vertices(); ++i) {
        const int t = truth.index_map[static_cast<std::size_t>(i)];
        if (t < 0 || t >= target.num_vertices()) throw IndexOutOfRange("ground-truth target out of range");
        u[i] = 0.5 * std::log(src[i] / tgt[t]);
    }
    return u;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    if (a.size() != b.size() || a.size() < 2) throw DimensionMismatch("pearson needs two equal vectors of length >= 2");
    const Eigen::ArrayXd x = a.array() - a.mean();
    const Eigen::ArrayXd y = b.array() - b.mean();
    const double denom = std::sqrt((x * x).sum() * (y * y).sum());
    return denom > 0.0 ? (x * y).sum() / denom : 0.0;
}

} // namespace lbbp
