#include <lbbp/correspondence.hpp>
#include <lbbp/errors.hpp>

#include <algorithm>
#include <limits>
#include <string>

namespace lbbp {

IndexPairs Correspondence::pairs() const
{
    IndexPairs out;
    out.reserve(index_map.size());
    for (std::size_t i = 0; i < index_map.size(); ++i) out.emplace_back(static_cast<int>(i), index_map[i]);
    return out;
}

Correspondence Correspondence::from_pairs(const IndexPairs& pairs)
{
    Correspondence c;
    c.method = "file";
    c.index_map.assign(pairs.size(), -1);
    for (const auto& [s, t] : pairs) {
        if (s < 0 || s >= static_cast<int>(pairs.size())) {
            throw IndexOutOfRange("source vertex " + std::to_string(s) + " outside a " +
                                  std::to_string(pairs.size()) + "-entry map");
        }
        if (c.index_map[static_cast<std::size_t>(s)] >= 0) {
            throw DuplicateLandmark("source vertex " + std::to_string(s) + " mapped twice");
        }
        if (t < 0) throw IndexOutOfRange("negative target vertex");
        c.index_map[static_cast<std::size_t>(s)] = t;
    }
    return c;
}

Correspondence point_to_point(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target)
{
    if (source.cols() != target.cols()) {
        throw DimensionMismatch("bases have " + std::to_string(source.cols()) + " and " +
                                std::to_string(target.cols()) + " columns");
    }
    if (target.rows() == 0) throw DimensionMismatch("empty target basis");

    // |s - t|^2 = |s|^2 - 2 s.t + |t|^2; the |s|^2 term does not change the argmin,
    // but distances are recomputed directly for the winners to stay exact.
    const Eigen::VectorXd target_norms = target.rowwise().squaredNorm();
    Correspondence out;
    out.index_map.resize(static_cast<std::size_t>(source.rows()));
    out.match_distance.resize(source.rows());

    constexpr Eigen::Index block = 256;
    for (Eigen::Index start = 0; start < source.rows(); start += block) {
        const Eigen::Index rows = std::min(block, source.rows() - start);
        const Eigen::MatrixXd cross = source.middleRows(start, rows) * target.transpose();
        for (Eigen::Index i = 0; i < rows; ++i) {
            Eigen::Index best = 0;
            double best_value = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < target.rows(); ++j) {
                const double v = target_norms[j] - 2.0 * cross(i, j);
                if (v < best_value) {
                    best_value = v;
                    best = j;
                }
            }
            out.index_map[static_cast<std::size_t>(start + i)] = static_cast<int>(best);
            out.match_distance[start + i] = (source.row(start + i) - target.row(best)).norm();
        }
    }
    return out;
}

Eigen::MatrixXd functional_map_apply(
    const Eigen::MatrixXd& h,
    const Eigen::MatrixXd& source_basis,
    const MassMatrix& source_mass,
    const Eigen::MatrixXd& target_basis)
{
    if (h.rows() != source_basis.rows() || source_mass.rows() != source_basis.rows() ||
        source_basis.cols() != target_basis.cols()) {
        throw DimensionMismatch("function, source basis, mass and target basis are inconsistent");
    }
    return target_basis * (source_basis.transpose() * (source_mass.diagonal().asDiagonal() * h));
}

void save_correspondence(const std::filesystem::path& path, const Correspondence& correspondence)
{
    save_index_pairs(path, correspondence.pairs());
}

Correspondence load_correspondence(const std::filesystem::path& path)
{
    return Correspondence::from_pairs(load_index_pairs(path));
}

} // namespace lbbp
