#include <lbbp/errors.hpp>
#include <lbbp/fem.hpp>

#include <Eigen/Geometry>
#include <Eigen/IterativeLinearSolvers>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iomanip>
#include <vector>

namespace lbbp {

MassMatrix assemble_mass(const TriangleMesh& mesh)
{
    return MassMatrix(vertex_areas(mesh));
}

SparseMatrix assemble_stiffness(const TriangleMesh& mesh)
{
    const int n = mesh.num_vertices();
    const auto& F = mesh.faces();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(12 * static_cast<std::size_t>(mesh.num_faces()));

    for (int f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const int apex = F(f, c);
            const int i = F(f, (c + 1) % 3);
            const int j = F(f, (c + 2) % 3);
            const Eigen::Vector3d u = mesh.position(i) - mesh.position(apex);
            const Eigen::Vector3d v = mesh.position(j) - mesh.position(apex);
            const double half_cot = 0.5 * u.dot(v) / u.cross(v).norm();
            triplets.emplace_back(i, j, -half_cot);
            triplets.emplace_back(j, i, -half_cot);
            triplets.emplace_back(i, i, half_cot);
            triplets.emplace_back(j, j, half_cot);
        }
    }
    SparseMatrix S(n, n);
    S.setFromTriplets(triplets.begin(), triplets.end());
    S.makeCompressed();

    int negative = 0;
    for (const Edge& e : mesh.edges()) {
        if (S.coeff(e.v0, e.v1) > 0.0) ++negative;
    }
    if (negative * 5 > mesh.num_edges()) {
        spdlog::warn("{} of {} edges have negative cotangent weights", negative, mesh.num_edges());
    }
    return S;
}

MassMatrix weighted_mass(const MassMatrix& mass, const Eigen::VectorXd& weight)
{
    if (weight.size() != mass.rows()) {
        throw DimensionMismatch("weight has " + std::to_string(weight.size()) + " entries, mass has " +
                                std::to_string(mass.rows()));
    }
    return MassMatrix(mass.diagonal().cwiseProduct(weight));
}

struct HeatStepper::Factorization
{
    Eigen::SimplicialLDLT<SparseMatrix> cholesky;
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    bool use_cg = false;

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const
    {
        if (!use_cg) return cholesky.solve(rhs);
        Eigen::MatrixXd out(rhs.rows(), rhs.cols());
        for (Eigen::Index c = 0; c < rhs.cols(); ++c) {
            out.col(c) = cg.solve(rhs.col(c));
            if (cg.info() != Eigen::Success) throw LinearSolveFailure("conjugate gradient did not converge");
        }
        return out;
    }
};

HeatStepper::HeatStepper(
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    double dt,
    const std::optional<Eigen::VectorXd>& weight)
    : m_dt(dt)
    , m_mass(weight ? lbbp::weighted_mass(mass, *weight).diagonal() : mass.diagonal())
    , m_factorization(std::make_unique<Factorization>())
{
    if (!(dt > 0.0)) throw LinearSolveFailure("heat step requires dt > 0");
    if (weight && (weight->array() <= 0.0).any()) {
        throw NonpositiveConformalFactor("heat weight must be strictly positive");
    }
    if (stiffness.rows() != m_mass.size()) throw DimensionMismatch("mass and stiffness sizes differ");

    SparseMatrix M(m_mass.size(), m_mass.size());
    M.reserve(Eigen::VectorXi::Ones(m_mass.size()));
    for (Eigen::Index i = 0; i < m_mass.size(); ++i) M.insert(i, i) = m_mass[i];
    const SparseMatrix lhs = M + (0.5 * dt) * stiffness;
    m_rhs = M - (0.5 * dt) * stiffness;

    m_factorization->cholesky.compute(lhs);
    if (m_factorization->cholesky.info() != Eigen::Success) {
        spdlog::warn("sparse Cholesky failed for the heat system; falling back to conjugate gradient");
        m_factorization->use_cg = true;
        m_factorization->cg.setTolerance(1e-10);
        m_factorization->cg.compute(lhs);
        if (m_factorization->cg.info() != Eigen::Success) throw LinearSolveFailure("cannot factor heat system");
    }
}

HeatStepper::~HeatStepper() = default;
HeatStepper::HeatStepper(HeatStepper&&) noexcept = default;
HeatStepper& HeatStepper::operator=(HeatStepper&&) noexcept = default;

Eigen::VectorXd HeatStepper::step(const Eigen::VectorXd& u) const
{
    return m_factorization->solve(m_rhs * u);
}

Eigen::MatrixXd HeatStepper::step(const Eigen::MatrixXd& u) const
{
    return m_factorization->solve(m_rhs * u);
}

Eigen::VectorXd heat_step(
    const MassMatrix& mass,
    const SparseMatrix& stiffness,
    const Eigen::VectorXd& u,
    double dt,
    const std::optional<Eigen::VectorXd>& weight)
{
    return HeatStepper(mass, stiffness, dt, weight).step(u);
}

void save_matrix_market(const std::filesystem::path& path, const SparseMatrix& matrix)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << '\n';
    out << std::setprecision(17);
    for (int k = 0; k < matrix.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
}

} // namespace lbbp
