#pragma once

#include <lbbp/mesh.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <filesystem>
#include <memory>
#include <optional>

namespace lbbp {

using SparseMatrix = Eigen::SparseMatrix<double>;
using MassMatrix = Eigen::DiagonalMatrix<double, Eigen::Dynamic>;

/// Lumped mass: M_ii is one third of the area of the first ring of vertex i.
MassMatrix assemble_mass(const TriangleMesh& mesh);

///
/// Cotangent stiffness matrix, S_ij = -(cot alpha_ij + cot beta_ij) / 2 on
/// edges and S_ii = -sum_j S_ij. Negative weights from obtuse triangles are
/// kept; a warning is logged when more than 20% of the edges carry one.
///
SparseMatrix assemble_stiffness(const TriangleMesh& mesh);

/// diag(weight) * M; weight holds per-vertex w^2 values.
MassMatrix weighted_mass(const MassMatrix& mass, const Eigen::VectorXd& weight);

///
/// Crank-Nicolson heat integrator, solving
///   (M_w + dt/2 S) u+ = (M_w - dt/2 S) u
/// with M_w = diag(weight) M. The left-hand side is factored once.
///
class HeatStepper
{
public:
    HeatStepper(
        const MassMatrix& mass,
        const SparseMatrix& stiffness,
        double dt,
        const std::optional<Eigen::VectorXd>& weight = std::nullopt);
    ~HeatStepper();
    HeatStepper(HeatStepper&&) noexcept;
    HeatStepper& operator=(HeatStepper&&) noexcept;

    Eigen::VectorXd step(const Eigen::VectorXd& u) const;
    Eigen::MatrixXd step(const Eigen::MatrixXd& u) const;

    double dt() const { return m_dt; }
    const Eigen::VectorXd& weighted_mass() const { return m_mass; }

private:
    struct Factorization;

    double m_dt;
    Eigen::VectorXd m_mass;
    SparseMatrix m_rhs;
    std::unique_ptr<Factorization> m_factorization;
};

/// One Crank-Nicolson step; see HeatStepper.
Eigen::VectorXd heat_step(
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    const Eigen::VectorXd& u,
    double dt,
    const std::optional<Eigen::VectorXd>& weight = std::nullopt);

/// MatrixMarket coordinate export for debugging.
void save_matrix_market(const std::filesystem::path& path, const SparseMatrix& matrix);

} // namespace lbbp
