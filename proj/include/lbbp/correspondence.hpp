#pragma once

#include <lbbp/fem.hpp>
#include <lbbp/mesh_io.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace lbbp {

/// Source-to-target vertex map.
struct Correspondence
{
    std::vector<VertexIndex> index_map;
    std::string method = "nearest";
    /// Distance to the matched row in coefficient space, when known.
    Eigen::VectorXd match_distance;

    int size() const { return static_cast<int>(index_map.size()); }

    IndexPairs pairs() const;
    static Correspondence from_pairs(const IndexPairs& pairs);
};

///
/// Matches every row of `source` to the Euclidean-nearest row of `target`
/// by exhaustive search; ties go to the lowest target index.
///
Correspondence point_to_point(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target);

/// Transfers h through the bases: target_basis * (source_basis^T M1 h).
Eigen::MatrixXd functional_map_apply(
    const Eigen::MatrixXd& h,
    const Eigen::MatrixXd& source_basis,
    const MassMatrix& source_mass,
    const Eigen::MatrixXd& target_basis);

/// "src tgt" per line, the landmark file format.
void save_correspondence(const std::filesystem::path& path, const Correspondence& correspondence);
/// Reads a full map: the sources must be exactly 0..n-1 in some order.
Correspondence load_correspondence(const std::filesystem::path& path);

} // namespace lbbp
