#include <lbbp/errors.hpp>
#include <lbbp/stiefel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace lbbp {

Eigen::MatrixXd cayley_generator(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gradient)
{
    return gradient * x.transpose() - x * gradient.transpose();
}

Eigen::MatrixXd cayley_retract(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gradient, double tau)
{
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    if (n <= 2 * k) {
        const Eigen::MatrixXd D = cayley_generator(x, gradient);
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        return (I + 0.5 * tau * D).partialPivLu().solve((I - 0.5 * tau * D) * x);
    }
    // D = U V^T with U = [G, X], V = [X, -G]:
    //   Q(tau) X = X - tau U (I + tau/2 V^T U)^{-1} V^T X.
    Eigen::MatrixXd U(n, 2 * k);
    U << gradient, x;
    Eigen::MatrixXd V(n, 2 * k);
    V << x, -gradient;
    const Eigen::MatrixXd VU = V.transpose() * U;
    const Eigen::MatrixXd VX = V.transpose() * x;
    const Eigen::MatrixXd small = Eigen::MatrixXd::Identity(2 * k, 2 * k) + 0.5 * tau * VU;
    return x - tau * (U * small.partialPivLu().solve(VX));
}

double orthonormality_error(const Eigen::MatrixXd& x)
{
    return (x.transpose() * x - Eigen::MatrixXd::Identity(x.cols(), x.cols())).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& x)
{
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
    const Eigen::MatrixXd r = qr.matrixQR().topRows(x.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (r(c, c) < 0.0) q.col(c) = -q.col(c);
    }
    return q;
}

double stiefel_gradient_norm(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gradient)
{
    // |G X^T - X G^T|_F^2 = 2 |G|^2 - 2 tr((G^T X)^2) when X^T X = I.
    const Eigen::MatrixXd gx = gradient.transpose() * x;
    const double sq = gradient.squaredNorm() - (gx * gx).trace();
    return std::sqrt(std::max(0.0, sq));
}

CurvilinearSearch::CurvilinearSearch(MatrixObjective objective, Eigen::MatrixXd x0, CurvilinearOptions options)
    : m_objective(std::move(objective))
    , m_options(options)
    , m_x(std::move(x0))
{
    m_value = m_objective(m_x, m_gradient);
    m_initial_value = m_value;
    m_evaluations = 1;
    m_gradient_norm = stiefel_gradient_norm(m_x, m_gradient);
    m_tangent = m_gradient - m_x * (m_gradient.transpose() * m_x);
    m_tau = m_options.initial_step;
    m_recent.push_back(m_value);
    m_converged = m_gradient_norm <= m_options.gradient_tolerance;
}

double CurvilinearSearch::reference_value() const
{
    return *std::max_element(m_recent.begin(), m_recent.end());
}

StepStatus CurvilinearSearch::step()
{
    if (m_converged) return StepStatus::Stalled;
    const double reference = reference_value();
    const double slope = m_gradient_norm * m_gradient_norm;

    double tau = m_tau;
    Eigen::MatrixXd trial;
    Eigen::MatrixXd trial_gradient;
    double trial_value = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt <= m_options.max_backtracks; ++attempt) {
        trial = cayley_retract(m_x, m_gradient, tau);
        trial_value = m_objective(trial, trial_gradient);
        ++m_evaluations;
        // Nonmonotone test against the recent maximum, and never above the start.
        if (std::isfinite(trial_value) && trial_value <= reference - m_options.armijo * tau * slope &&
            trial_value <= m_initial_value) {
            accepted = true;
            break;
        }
        tau *= m_options.backtrack_factor;
        if (tau < m_options.min_step) break;
    }
    if (!accepted) return StepStatus::Stalled;

    if (orthonormality_error(trial) > m_options.orthonormality_repair) {
        trial = orthonormalize(trial);
        trial_value = m_objective(trial, trial_gradient);
        ++m_evaluations;
        if (!(trial_value <= m_initial_value)) return StepStatus::Stalled;
    }

    const Eigen::MatrixXd tangent = trial_gradient - trial * (trial_gradient.transpose() * trial);
    const Eigen::MatrixXd s = trial - m_x;
    const Eigen::MatrixXd y = tangent - m_tangent;
    const double previous_value = m_value;

    m_x = std::move(trial);
    m_gradient = std::move(trial_gradient);
    m_tangent = tangent;
    m_value = trial_value;
    m_gradient_norm = stiefel_gradient_norm(m_x, m_gradient);
    ++m_iterations;

    m_recent.push_back(m_value);
    while (static_cast<int>(m_recent.size()) > std::max(1, m_options.nonmonotone_window)) m_recent.pop_front();

    // Alternate the two Barzilai-Borwein step lengths.
    const double sy = std::abs((s.array() * y.array()).sum());
    double next = m_options.initial_step;
    if (sy > 0.0) {
        next = (m_iterations % 2 == 1) ? s.squaredNorm() / sy : sy / y.squaredNorm();
    }
    m_tau = std::clamp(next, m_options.min_step, m_options.max_step);

    const double relative_change = std::abs(previous_value - m_value) / (std::abs(previous_value) + 1.0);
    if (m_gradient_norm <= m_options.gradient_tolerance || relative_change <= m_options.relative_value_tolerance) {
        m_converged = true;
    }
    return StepStatus::Accepted;
}

void CurvilinearSearch::run(int max_iterations)
{
    for (int i = 0; i < max_iterations; ++i) {
        if (step() != StepStatus::Accepted) break;
        if (m_converged) break;
    }
}

Eigen::MatrixXd curvilinear_step(const Eigen::MatrixXd& x, const MatrixObjective& objective, const CurvilinearOptions& options)
{
    CurvilinearSearch search(objective, x, options);
    if (search.converged()) return search.x();
    if (search.step() != StepStatus::Accepted) {
        throw LineSearchFailure("no curvilinear trial step satisfied the decrease condition");
    }
    return search.x();
}

} // namespace lbbp
