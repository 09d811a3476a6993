#pragma once

#include <lbbp/mesh.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace lbbp {

enum class MeshFormat { OFF, OBJ, PLY };

/// Guesses the format from the file extension (case-insensitive).
std::optional<MeshFormat> format_from_extension(const std::filesystem::path& path);

/// Reads an ASCII OFF, OBJ or PLY file. Polygons are fan-triangulated.
TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format, MeshOptions options = {});
TriangleMesh load_mesh(const std::filesystem::path& path, MeshOptions options = {});

TriangleMesh read_off(std::istream& in, MeshOptions options = {});
TriangleMesh read_obj(std::istream& in, MeshOptions options = {});
TriangleMesh read_ply(std::istream& in, MeshOptions options = {});

void write_off(std::ostream& out, const TriangleMesh& mesh);
void save_off(const std::filesystem::path& path, const TriangleMesh& mesh);

/// Vertex index pairs "src tgt", one per line, 0-based; '#' starts a comment.
using IndexPairs = std::vector<std::pair<VertexIndex, VertexIndex>>;

IndexPairs read_index_pairs(std::istream& in);
IndexPairs load_index_pairs(const std::filesystem::path& path);
void write_index_pairs(std::ostream& out, const IndexPairs& pairs);
void save_index_pairs(const std::filesystem::path& path, const IndexPairs& pairs);

/// One scalar per line, '#' comments allowed. Written with 17 significant digits.
Eigen::VectorXd load_scalars(const std::filesystem::path& path);
void save_scalars(const std::filesystem::path& path, const Eigen::VectorXd& values);

} // namespace lbbp
