#pragma once

#include <Eigen/Core>

#include <deque>
#include <functional>

namespace lbbp {

/// Objective on n x k matrices: returns the value and writes the Euclidean gradient.
using MatrixObjective = std::function<double(const Eigen::MatrixXd& x, Eigen::MatrixXd& gradient)>;

struct CurvilinearOptions
{
    double initial_step = 1e-3;
    int max_iterations = 100;
    int max_backtracks = 20;
    /// Sufficient-decrease constant.
    double armijo = 1e-4;
    double backtrack_factor = 0.2;
    /// Reference value is the max over this many recent accepted values.
    int nonmonotone_window = 5;
    double gradient_tolerance = 1e-10;
    double relative_value_tolerance = 1e-14;
    double min_step = 1e-20;
    double max_step = 1e20;
    /// Re-orthonormalise (sign-preserving QR) once |X^T X - I|_max exceeds this.
    double orthonormality_repair = 1e-10;
};

///
/// Cayley retraction Q(tau) X with Q(tau) = (I + tau/2 D)^{-1} (I - tau/2 D),
/// D = G X^T - X G^T. For n > 2k the inverse is taken through the
/// Sherman-Morrison-Woodbury identity on a 2k x 2k system.
///
Eigen::MatrixXd cayley_retract(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gradient, double tau);

/// Skew generator D = G X^T - X G^T (dense n x n; test helper for small n).
Eigen::MatrixXd cayley_generator(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gradient);

/// |X^T X - I|_max.
double orthonormality_error(const Eigen::MatrixXd& x);

/// Thin QR with column signs chosen so that diag(R) > 0.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x);

/// Norm of the Riemannian gradient along the Cayley curve, |D|_F / sqrt(2).
double stiefel_gradient_norm(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gradient);

enum class StepStatus { Accepted, Stalled };

///
/// Feasible curvilinear search on the Stiefel manifold with alternating
/// Barzilai-Borwein steps and a nonmonotone Armijo rule. The best point seen
/// never exceeds the starting value, so a run of steps is a descent method
/// on the objective as a whole.
///
class CurvilinearSearch
{
public:
    CurvilinearSearch(MatrixObjective objective, Eigen::MatrixXd x0, CurvilinearOptions options = {});

    /// One curvilinear step with backtracking.
    StepStatus step();

    /// Steps until convergence, stall or the iteration budget.
    void run(int max_iterations);

    const Eigen::MatrixXd& x() const { return m_x; }
    double value() const { return m_value; }
    const Eigen::MatrixXd& gradient() const { return m_gradient; }
    double initial_value() const { return m_initial_value; }
    double gradient_norm() const { return m_gradient_norm; }
    int iterations() const { return m_iterations; }
    int evaluations() const { return m_evaluations; }
    bool converged() const { return m_converged; }
    double step_size() const { return m_tau; }

private:
    double reference_value() const;

    MatrixObjective m_objective;
    CurvilinearOptions m_options;
    Eigen::MatrixXd m_x;
    Eigen::MatrixXd m_gradient;
    Eigen::MatrixXd m_tangent;
    double m_value = 0.0;
    double m_initial_value = 0.0;
    double m_gradient_norm = 0.0;
    double m_tau = 0.0;
    int m_iterations = 0;
    int m_evaluations = 0;
    bool m_converged = false;
    std::deque<double> m_recent;
};

/// Single curvilinear step; throws LineSearchFailure if no trial is accepted.
Eigen::MatrixXd curvilinear_step(
    const Eigen::MatrixXd& x,
    const MatrixObjective& objective,
    const CurvilinearOptions& options = {});

} // namespace lbbp
