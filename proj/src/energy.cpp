#include <lbbp/energy.hpp>
#include <lbbp/errors.hpp>
#include <lbbp/stiefel.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace lbbp {

RegistrationProblem RegistrationProblem::build(
    const MassMatrix& source_mass,
    const Eigen::MatrixXd& source_basis,
    const Eigen::MatrixXd& source_features,
    const MassMatrix& target_mass,
    const SparseMatrix& target_stiffness,
    const Eigen::MatrixXd& target_features)
{
    if (source_basis.rows() != source_mass.rows() || source_features.rows() != source_mass.rows()) {
        throw DimensionMismatch("source basis or features do not match the source mesh");
    }
    if (target_features.rows() != target_mass.rows() || target_stiffness.rows() != target_mass.rows()) {
        throw DimensionMismatch("target features or stiffness do not match the target mesh");
    }
    if (source_features.cols() != target_features.cols()) {
        throw DimensionMismatch("source and target feature counts differ");
    }
    if (source_features.cols() == 0) throw EmptyFeatureSet("no feature columns");

    RegistrationProblem p;
    p.coefficients = source_features.transpose() * (source_mass.diagonal().asDiagonal() * source_basis);
    p.target_mass = target_mass.diagonal();
    p.target_mass_sqrt = p.target_mass.cwiseSqrt();
    p.target_stiffness = target_stiffness;
    p.target_features = target_features;
    p.area = source_mass.diagonal().sum();
    return p;
}

namespace {

void check_inputs(const RegistrationProblem& p, const Eigen::VectorXd& w, const Eigen::MatrixXd& psibar)
{
    if (w.size() != p.n() || psibar.rows() != p.n() || psibar.cols() != p.k()) {
        throw DimensionMismatch("iterate does not match the registration problem");
    }
    if (!(w.minCoeff() > 0.0)) throw NonpositiveConformalFactor("w must be strictly positive");
}

/// Shared intermediate quantities of the energy and both gradients.
struct Terms
{
    Eigen::VectorXd scale;    // w .* l
    Eigen::MatrixXd residual; // P - G^T diag(scale) Psibar
    Eigen::MatrixXd x;        // diag(1/scale) Psibar
    Eigen::MatrixXd sx;       // S2 x
    Eigen::VectorXd sw;       // S2 w
    EnergyBreakdown energy;
};

Terms evaluate(const RegistrationProblem& p, const Eigen::VectorXd& w, const Eigen::MatrixXd& psibar,
               const EnergyWeights& r, double b)
{
    check_inputs(p, w, psibar);
    Terms t;
    t.scale = w.cwiseProduct(p.target_mass_sqrt);
    t.residual = p.coefficients - p.target_features.transpose() * (t.scale.asDiagonal() * psibar);
    t.x = t.scale.cwiseInverse().asDiagonal() * psibar;
    t.sx = p.target_stiffness * t.x;
    t.sw = p.target_stiffness * w;

    EnergyBreakdown& e = t.energy;
    e.coeff = t.residual.squaredNorm();
    e.eigen = (t.x.array() * t.sx.array()).sum();
    e.harmonic = w.dot(t.sw);
    e.area_residual = w.cwiseProduct(w).dot(p.target_mass) - p.area;
    e.total = 0.5 * (r.r1 * e.coeff + r.r2 * e.eigen + r.r3 * e.harmonic);
    const double c = e.area_residual + b;
    e.lagrangian = e.total + 0.5 * r.r4 * c * c;
    return t;
}

Eigen::MatrixXd psibar_gradient(const RegistrationProblem& p, const Terms& t, const EnergyWeights& r)
{
    const Eigen::MatrixXd gr = p.target_features * t.residual;
    return -r.r1 * (t.scale.asDiagonal() * gr) + r.r2 * (t.scale.cwiseInverse().asDiagonal() * t.sx);
}

Eigen::VectorXd w_gradient(const RegistrationProblem& p, const Terms& t, const Eigen::VectorXd& w,
                           const Eigen::MatrixXd& psibar, const EnergyWeights& r, double b)
{
    const Eigen::MatrixXd gr = p.target_features * t.residual;
    const Eigen::VectorXd coeff = (gr.array() * psibar.array()).rowwise().sum().matrix();
    const Eigen::VectorXd eig = (t.sx.array() * t.x.array()).rowwise().sum().matrix();
    const double c = t.energy.area_residual + b;
    return -r.r1 * p.target_mass_sqrt.cwiseProduct(coeff) - r.r2 * eig.cwiseQuotient(w) + r.r3 * t.sw
           + (2.0 * r.r4 * c) * p.target_mass.cwiseProduct(w);
}

} // namespace

EnergyBreakdown energy(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    double multiplier)
{
    return evaluate(problem, w, psibar, weights, multiplier).energy;
}

Eigen::MatrixXd grad_psibar(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    const std::optional<Proximal<Eigen::MatrixXd>>& proximal)
{
    const Terms t = evaluate(problem, w, psibar, weights, 0.0);
    Eigen::MatrixXd g = psibar_gradient(problem, t, weights);
    if (proximal) g += (psibar - proximal->anchor) / proximal->eta;
    return g;
}

Eigen::VectorXd grad_w(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    double multiplier,
    const std::optional<Proximal<Eigen::VectorXd>>& proximal)
{
    const Terms t = evaluate(problem, w, psibar, weights, multiplier);
    Eigen::VectorXd g = w_gradient(problem, t, w, psibar, weights, multiplier);
    if (proximal) g += (w - proximal->anchor) / proximal->eta;
    return g;
}

double energy_and_grad_psibar(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    Eigen::MatrixXd& gradient)
{
    const Terms t = evaluate(problem, w, psibar, weights, 0.0);
    gradient = psibar_gradient(problem, t, weights);
    return t.energy.total;
}

double lagrangian_and_grad_w(
    const RegistrationProblem& problem,
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const EnergyWeights& weights,
    double multiplier,
    Eigen::VectorXd& gradient)
{
    const Terms t = evaluate(problem, w, psibar, weights, multiplier);
    gradient = w_gradient(problem, t, w, psibar, weights, multiplier);
    return t.energy.lagrangian;
}

Coordinates::Coordinates(int n)
    : m_n(n)
    , m_dim(n)
{}

Coordinates::Coordinates(const SparseMatrix& u, double max_condition)
    : m_reduced(true)
    , m_n(static_cast<int>(u.rows()))
    , m_dim(static_cast<int>(u.cols()))
    , m_u(u)
{
    m_gram = Eigen::MatrixXd(SparseMatrix(u.transpose() * u));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(m_gram, Eigen::EigenvaluesOnly);
    const double lo = spectrum.eigenvalues().minCoeff();
    const double hi = spectrum.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > max_condition) {
        throw IllConditionedGram("cond(u^T u) = " + std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()));
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(m_gram);
    if (llt.info() != Eigen::Success) throw IllConditionedGram("u^T u is not positive definite");
    m_r = llt.matrixU();
}

Eigen::MatrixXd Coordinates::psibar(const Eigen::MatrixXd& c) const
{
    if (!m_reduced) return c;
    return m_u * m_r.triangularView<Eigen::Upper>().solve(c);
}

Eigen::VectorXd Coordinates::w(const Eigen::VectorXd& d) const
{
    if (!m_reduced) return d;
    return m_u * d;
}

Eigen::MatrixXd Coordinates::pull_psibar(const Eigen::MatrixXd& gradient) const
{
    if (!m_reduced) return gradient;
    const Eigen::MatrixXd ut = m_u.transpose() * gradient;
    return m_r.triangularView<Eigen::Upper>().transpose().solve(ut);
}

Eigen::VectorXd Coordinates::pull_w(const Eigen::VectorXd& gradient) const
{
    if (!m_reduced) return gradient;
    return m_u.transpose() * gradient;
}

Eigen::MatrixXd Coordinates::fit_psibar(const Eigen::MatrixXd& psibar) const
{
    if (!m_reduced) return orthonormalize(psibar);
    // B = u R^{-1} has orthonormal columns, so B^T psibar is the least-squares fit.
    return orthonormalize(pull_psibar(psibar));
}

Eigen::VectorXd Coordinates::fit_w(const Eigen::VectorXd& w) const
{
    if (!m_reduced) return w;
    return m_gram.llt().solve(Eigen::VectorXd(m_u.transpose() * w));
}

} // namespace lbbp
