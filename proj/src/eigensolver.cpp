#include <lbbp/eigensolver.hpp>
#include <lbbp/errors.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <string>

namespace lbbp {

static_assert(std::endian::native == std::endian::little, "eigensystem files are written in host byte order");

namespace {

Eigen::MatrixXd random_block(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    Eigen::MatrixXd block(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) block(r, c) = normal(rng);
    }
    return block;
}

/// Orthonormalises `block` against the first `used` columns of `basis`, the
/// optional unit vector `deflated`, and itself; rank-deficient columns are
/// replaced by random directions.
void orthonormalize_block(
    Eigen::MatrixXd& block,
    const Eigen::MatrixXd& basis,
    Eigen::Index used,
    const Eigen::VectorXd* deflated,
    std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
        for (int attempt = 0; attempt < 5; ++attempt) {
            const double before = block.col(c).norm();
            for (int pass = 0; pass < 2; ++pass) {
                if (deflated) block.col(c) -= deflated->dot(block.col(c)) * (*deflated);
                if (used > 0) {
                    const Eigen::VectorXd h = basis.leftCols(used).transpose() * block.col(c);
                    block.col(c) -= basis.leftCols(used) * h;
                }
                if (c > 0) {
                    const Eigen::VectorXd h = block.leftCols(c).transpose() * block.col(c);
                    block.col(c) -= block.leftCols(c) * h;
                }
            }
            const double after = block.col(c).norm();
            if (after > 1e-10 * std::max(before, 1e-300)) {
                block.col(c) /= after;
                break;
            }
            for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = normal(rng);
        }
    }
}

struct Pencil
{
    const SparseMatrix& stiffness;
    Eigen::VectorXd b;
    Eigen::VectorXd b_sqrt;
    Eigen::VectorXd b_inv_sqrt;
};

Eigen::VectorXd residuals_for(const Pencil& pencil, const Eigen::VectorXd& values, const Eigen::MatrixXd& phi)
{
    const Eigen::MatrixXd sphi = pencil.stiffness * phi;
    Eigen::VectorXd res(values.size());
    for (Eigen::Index c = 0; c < values.size(); ++c) {
        res[c] = (pencil.b_inv_sqrt.asDiagonal() * (sphi.col(c) - values[c] * pencil.b.asDiagonal() * phi.col(c))).norm();
    }
    return res;
}

/// Dense path for small problems: eigen-decompose B^{-1/2} S B^{-1/2} on the
/// complement of the deflated vector.
void solve_dense(
    const Pencil& pencil,
    const Eigen::VectorXd* deflated,
    int wanted,
    Eigen::VectorXd& values,
    Eigen::MatrixXd& x)
{
    const Eigen::Index n = pencil.b.size();
    const Eigen::MatrixXd dense = Eigen::MatrixXd(pencil.stiffness);
    Eigen::MatrixXd C = pencil.b_inv_sqrt.asDiagonal() * dense * pencil.b_inv_sqrt.asDiagonal();
    C = 0.5 * (C + C.transpose()).eval();
    Eigen::MatrixXd Q;
    if (deflated) {
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(*deflated);
        const Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
        Q = full.rightCols(n - 1);
    } else {
        Q = Eigen::MatrixXd::Identity(n, n);
    }
    Eigen::MatrixXd reduced = Q.transpose() * C * Q;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
    if (eig.info() != Eigen::Success) throw ConvergenceFailure("dense eigen-decomposition failed");
    values = eig.eigenvalues().head(wanted);
    x = Q * eig.eigenvectors().leftCols(wanted);
}

} // namespace

void normalize_signs(Eigen::MatrixXd& vectors)
{
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            const double a = std::abs(vectors(r, c));
            // Treat near-ties as ties so the choice is stable under rounding.
            if (a > best_abs * (1.0 + 1e-9)) {
                best_abs = a;
                best = r;
            }
        }
        if (vectors(best, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

Eigensystem solve_eigs(const SparseMatrix& stiffness, const MassMatrix& weight, int k, const EigenOptions& options)
{
    const Eigen::Index n = stiffness.rows();
    if (stiffness.cols() != n || weight.rows() != n) throw DimensionMismatch("stiffness and B sizes differ");
    if (k < 1 || k >= n) {
        throw InvalidK("requested " + std::to_string(k) + " eigenpairs from a " + std::to_string(n) + "-vertex operator");
    }
    if ((weight.diagonal().array() <= 0.0).any()) throw NonpositiveConformalFactor("B must be positive diagonal");

    Pencil pencil{stiffness, weight.diagonal(), weight.diagonal().cwiseSqrt(), weight.diagonal().cwiseSqrt().cwiseInverse()};
    const bool deflate = options.deflate_constant;
    Eigen::VectorXd constant_dir;
    if (deflate) constant_dir = pencil.b_sqrt.normalized();
    const Eigen::VectorXd* deflated = deflate ? &constant_dir : nullptr;

    const int wanted = k - (deflate ? 1 : 0);
    const Eigen::Index n_eff = n - (deflate ? 1 : 0);
    const int block = static_cast<int>(std::min<Eigen::Index>(wanted + std::max(0, options.oversampling), n_eff));
    const int steps = std::max(2, options.krylov_steps);

    Eigen::VectorXd values;
    Eigen::MatrixXd x;
    if (wanted > 0 && (static_cast<Eigen::Index>(block) * steps >= n_eff || n <= 64)) {
        solve_dense(pencil, deflated, wanted, values, x);
    } else if (wanted > 0) {
        const double shift = options.shift.value_or(-0.05 / pencil.b.sum());
        SparseMatrix shifted = stiffness;
        for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift * pencil.b[i];
        Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
        if (factor.info() != Eigen::Success) throw ConvergenceFailure("cannot factor the shifted operator");

        auto apply = [&](const Eigen::MatrixXd& v) {
            Eigen::MatrixXd out = pencil.b_sqrt.asDiagonal() * factor.solve(pencil.b_sqrt.asDiagonal() * v);
            if (deflated) out -= (*deflated) * (deflated->transpose() * out);
            return out;
        };

        std::mt19937_64 rng(options.seed);
        Eigen::MatrixXd current = random_block(n, block, rng);
        Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(block) * steps);
        Eigen::MatrixXd images(n, static_cast<Eigen::Index>(block) * steps);
        Eigen::MatrixXd empty;
        orthonormalize_block(current, empty, 0, deflated, rng);

        const int max_cycles = std::max(1, options.max_iterations_per_pair * k);
        bool converged = false;
        for (int cycle = 0; cycle < max_cycles && !converged; ++cycle) {
            Eigen::Index used = 0;
            Eigen::MatrixXd next = current;
            for (int s = 0; s < steps; ++s) {
                if (s > 0) orthonormalize_block(next, basis, used, deflated, rng);
                basis.middleCols(used, block) = next;
                images.middleCols(used, block) = apply(next);
                next = images.middleCols(used, block);
                used += block;
            }
            Eigen::MatrixXd H = basis.transpose() * images;
            H = 0.5 * (H + H.transpose()).eval();
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
            if (eig.info() != Eigen::Success) throw ConvergenceFailure("Rayleigh-Ritz step failed");

            // Largest theta first.
            const Eigen::MatrixXd ritz = eig.eigenvectors().rightCols(block).rowwise().reverse();
            const Eigen::VectorXd theta = eig.eigenvalues().tail(block).reverse();
            current = basis * ritz;

            values.resize(wanted);
            for (int i = 0; i < wanted; ++i) values[i] = shift + 1.0 / theta[i];
            x = current.leftCols(wanted);
            const Eigen::MatrixXd phi = pencil.b_inv_sqrt.asDiagonal() * x;
            const Eigen::VectorXd res = residuals_for(pencil, values, phi);
            converged = true;
            for (int i = 0; i < wanted; ++i) {
                if (!(res[i] <= options.tolerance * (1.0 + std::abs(values[i])))) {
                    converged = false;
                    break;
                }
            }
            if (!converged) orthonormalize_block(current, empty, 0, deflated, rng);
        }
        if (!converged) {
            throw ConvergenceFailure("eigenpairs did not reach tolerance within " + std::to_string(max_cycles) + " cycles");
        }
    }

    // Sort ascending (Ritz order may interleave within clusters).
    std::vector<int> order(static_cast<std::size_t>(wanted));
    for (int i = 0; i < wanted; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });

    Eigensystem out;
    out.weight = pencil.b;
    out.values.resize(k);
    out.vectors.resize(n, k);
    int col = 0;
    if (deflate) {
        const Eigen::VectorXd phi0 = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(pencil.b.sum()));
        out.vectors.col(0) = phi0;
        out.values[0] = std::max(0.0, phi0.dot(stiffness * phi0));
        col = 1;
    }
    for (int i = 0; i < wanted; ++i, ++col) {
        out.values[col] = values[order[i]];
        out.vectors.col(col) = pencil.b_inv_sqrt.asDiagonal() * x.col(order[i]);
    }
    normalize_signs(out.vectors);
    return out;
}

Eigen::VectorXd eigen_residuals(const SparseMatrix& stiffness, const Eigensystem& system)
{
    Pencil pencil{stiffness, system.weight, system.weight.cwiseSqrt(), system.weight.cwiseSqrt().cwiseInverse()};
    return residuals_for(pencil, system.values, system.vectors);
}

BlockOperator conformal_stiffness_operator(const SparseMatrix& stiffness, const Eigen::VectorXd& mass, const Eigen::VectorXd& w)
{
    const Eigen::VectorXd scale = (w.cwiseProduct(mass.cwiseSqrt())).cwiseInverse();
    return [&stiffness, scale](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
        return scale.asDiagonal() * (stiffness * (scale.asDiagonal() * x));
    };
}

Eigen::MatrixXd eig_via_stiefel(
    const BlockOperator& op,
    const Eigen::MatrixXd& warm_start,
    int max_iterations,
    const CurvilinearOptions& options)
{
    if (orthonormality_error(warm_start) > 1e-8) {
        throw ConvergenceFailure("warm start for the Stiefel eigen-solve is not orthonormal");
    }
    MatrixObjective trace = [&op](const Eigen::MatrixXd& x, Eigen::MatrixXd& gradient) {
        const Eigen::MatrixXd ax = op(x);
        gradient = 2.0 * ax;
        return (x.array() * ax.array()).sum();
    };
    CurvilinearSearch search(trace, warm_start, options);
    search.run(max_iterations);
    return search.x();
}

void write_eigensystem(std::ostream& out, const Eigensystem& system)
{
    const std::uint64_t n = static_cast<std::uint64_t>(system.n());
    const std::uint64_t k = static_cast<std::uint64_t>(system.k());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&k), sizeof k);
    out.write(reinterpret_cast<const char*>(system.values.data()), static_cast<std::streamsize>(k * sizeof(double)));
    out.write(reinterpret_cast<const char*>(system.vectors.data()), static_cast<std::streamsize>(n * k * sizeof(double)));
    if (!out) throw IoError("failed writing eigensystem");
}

Eigensystem read_eigensystem(std::istream& in)
{
    std::uint64_t n = 0, k = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&k), sizeof k);
    if (!in || n == 0 || k == 0 || n > (1ULL << 32) || k > n) throw ParseError("bad eigensystem header");
    Eigensystem system;
    system.values.resize(static_cast<Eigen::Index>(k));
    system.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    in.read(reinterpret_cast<char*>(system.values.data()), static_cast<std::streamsize>(k * sizeof(double)));
    in.read(reinterpret_cast<char*>(system.vectors.data()), static_cast<std::streamsize>(n * k * sizeof(double)));
    if (!in) throw ParseError("truncated eigensystem file");
    return system;
}

void save_eigensystem(const std::filesystem::path& path, const Eigensystem& system)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_eigensystem(out, system);
}

Eigensystem load_eigensystem(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_eigensystem(in);
}

void save_eigensystem_csv(const std::filesystem::path& path, const Eigensystem& system)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << std::setprecision(17) << "row";
    for (int c = 0; c < system.k(); ++c) out << ",phi_" << c;
    out << "\nlambda";
    for (int c = 0; c < system.k(); ++c) out << ',' << system.values[c];
    out << '\n';
    for (int r = 0; r < system.n(); ++r) {
        out << r;
        for (int c = 0; c < system.k(); ++c) out << ',' << system.vectors(r, c);
        out << '\n';
    }
}

} // namespace lbbp
