#pragma once

#include <lbbp/fem.hpp>

#include <Eigen/Core>

#include <optional>

namespace lbbp {

///
/// Fixed data of one registration. The source enters only through the
/// coefficient block P = F^T M1 Phi; the target through its mass, stiffness
/// and features.
///
struct RegistrationProblem
{
    /// l x k spectral coefficients of the source features.
    Eigen::MatrixXd coefficients;
    /// Diagonal of the target mass matrix and its square root L.
    Eigen::VectorXd target_mass;
    Eigen::VectorXd target_mass_sqrt;
    SparseMatrix target_stiffness;
    /// n2 x l target features, columns aligned with the source features.
    Eigen::MatrixXd target_features;
    /// Source surface area A, the target area after deformation.
    double area = 0.0;

    int n() const { return static_cast<int>(target_mass.size()); }
    int k() const { return static_cast<int>(coefficients.cols()); }

    static RegistrationProblem build(
        const MassMatrix& source_mass,
        const Eigen::MatrixXd& source_basis,
        const Eigen::MatrixXd& source_features,
        const MassMatrix& target_mass,
        const SparseMatrix& target_stiffness,
        const Eigen::MatrixXd& target_features);
};

struct EnergyWeights
{
    double r1 = 10.0;
    double r2 = 10.0;
    double r3 = 1.0;
    double r4 = 0.01;
};

/// Unscaled terms of the energy; `total` and `lagrangian` carry the weights.
struct EnergyBreakdown
{
    /// |P - G^T diag(w) L Psibar|_F^2
    double coeff = 0.0;
    /// tr(Psibar^T Sbar(w) Psibar)
    double eigen = 0.0;
    /// w^T S2 w
    double harmonic = 0.0;
    /// w^T M2 w - A
    double area_residual = 0.0;
    /// r1/2 coeff + r2/2 eigen + r3/2 harmonic
    double total = 0.0;
    /// total + r4/2 (area_residual + b)^2
    double lagrangian = 0.0;
};

EnergyBreakdown energy(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    double multiplier = 0.0);

/// Proximal anchor (x_prev, eta) adding |x - x_prev|^2 / (2 eta).
template <typename T>
struct Proximal
{
    const T& anchor;
    double eta;
};

/// Euclidean gradient in Psibar of E (+ proximal term).
Eigen::MatrixXd grad_psibar(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    const std::optional<Proximal<Eigen::MatrixXd>>& proximal = std::nullopt);

/// Euclidean gradient in w of the augmented Lagrangian (+ proximal term).
Eigen::VectorXd grad_w(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    double multiplier = 0.0,
    const std::optional<Proximal<Eigen::VectorXd>>& proximal = std::nullopt);

/// Energy value and Psibar gradient from a single pass (no proximal term).
double energy_and_grad_psibar(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    Eigen::MatrixXd& gradient);

/// Augmented Lagrangian value and w gradient from a single pass (no proximal term).
double lagrangian_and_grad_w(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    double multiplier,
    Eigen::VectorXd& gradient);

///
/// Optimisation coordinates. The identity map gives the full problem; a
/// reduced map expresses
///   Psibar = B C,  B = u R^{-1},  u^T u = R^T R,   w = u D,
/// so C on the Stiefel manifold keeps Psibar orthonormal.
///
class Coordinates
{
public:
    /// Full problem on n vertices.
    explicit Coordinates(int n);
    /// Reduced problem in the span of the columns of u (n x nbar).
    Coordinates(const SparseMatrix& u, double max_condition = 1e12);

    bool reduced() const { return m_reduced; }
    int n() const { return m_n; }
    int dimension() const { return m_dim; }

    Eigen::MatrixXd psibar(const Eigen::MatrixXd& c) const;
    Eigen::VectorXd w(const Eigen::VectorXd& d) const;
    /// Chain rule: maps full-space gradients to coordinate gradients.
    Eigen::MatrixXd pull_psibar(const Eigen::MatrixXd& gradient) const;
    Eigen::VectorXd pull_w(const Eigen::VectorXd& gradient) const;
    /// Best coordinates for a full-space iterate: least squares for Psibar
    /// followed by orthonormalisation, and the mass-free least squares for w.
    Eigen::MatrixXd fit_psibar(const Eigen::MatrixXd& psibar) const;
    Eigen::VectorXd fit_w(const Eigen::VectorXd& w) const;

private:
    bool m_reduced = false;
    int m_n = 0;
    int m_dim = 0;
    SparseMatrix m_u;
    /// Upper Cholesky factor R of u^T u.
    Eigen::MatrixXd m_r;
    Eigen::MatrixXd m_gram;
};

} // namespace lbbp
