#pragma once

#include <lbbp/fem.hpp>
#include <lbbp/stiefel.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>

namespace lbbp {

///
/// First k eigenpairs of S phi = lambda B phi, B positive diagonal.
/// Columns of `vectors` are B-orthonormal; values ascend.
///
struct Eigensystem
{
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    /// Diagonal of the B matrix the system was solved against.
    Eigen::VectorXd weight;

    int n() const { return static_cast<int>(vectors.rows()); }
    int k() const { return static_cast<int>(vectors.cols()); }
};

struct EigenOptions
{
    /// Residual |B^{-1/2}(S phi - lambda B phi)| <= tolerance * (1 + lambda).
    double tolerance = 1e-8;
    /// Restart budget is this many cycles per requested pair.
    int max_iterations_per_pair = 50;
    /// Take the B-weighted constant as the exact kernel vector and solve on its complement.
    bool deflate_constant = true;
    /// Spectral shift; defaults to -0.05 / trace(B).
    std::optional<double> shift;
    /// Block Krylov steps per restart cycle.
    int krylov_steps = 4;
    /// Extra block columns beyond the wanted count.
    int oversampling = 8;
    std::uint64_t seed = 0x5eed;
};

///
/// Shift-invert block Lanczos with explicit restarts. The operator is
/// B^{1/2} (S - shift B)^{-1} B^{1/2} with B-weighted constants projected
/// out; its largest eigenvalues map to the smallest of the pencil. Columns
/// are sign-normalised so the largest-magnitude entry (first on ties) is
/// nonnegative.
///
Eigensystem solve_eigs(const SparseMatrix& stiffness, const MassMatrix& weight, int k, const EigenOptions& options = {});

/// Per-column residuals |B^{-1/2}(S phi - lambda B phi)|.
Eigen::VectorXd eigen_residuals(const SparseMatrix& stiffness, const Eigensystem& system);

/// Flips each column so its largest-magnitude entry is nonnegative.
void normalize_signs(Eigen::MatrixXd& vectors);

/// Applies a symmetric operator to an n x k block.
using BlockOperator = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

///
/// Conformally weighted stiffness in orthonormal coordinates,
///   X -> L^{-1} W^{-1} S W^{-1} L^{-1} X,
/// with L = diag(sqrt(mass)) and W = diag(w). Never formed densely.
///
BlockOperator conformal_stiffness_operator(const SparseMatrix& stiffness, const Eigen::VectorXd& mass, const Eigen::VectorXd& w);

///
/// Minimises tr(X^T A X) over orthonormal X by curvilinear search from a warm
/// start, so the result spans the lowest invariant subspace near the start
/// without reintroducing sign or rotation ambiguity.
///
Eigen::MatrixXd eig_via_stiefel(
    const BlockOperator& op,
    const Eigen::MatrixXd& warm_start,
    int max_iterations,
    const CurvilinearOptions& options = {});

/// Binary layout: uint64 n, uint64 k, k doubles of values, n*k doubles of
/// vectors in column-major order; all little-endian.
void write_eigensystem(std::ostream& out, const Eigensystem& system);
Eigensystem read_eigensystem(std::istream& in);
void save_eigensystem(const std::filesystem::path& path, const Eigensystem& system);
Eigensystem load_eigensystem(const std::filesystem::path& path);

/// Debug CSV: a header row, one "lambda" row, then one row per vertex.
void save_eigensystem_csv(const std::filesystem::path& path, const Eigensystem& system);

} // namespace lbbp
