#pragma once

#include <lbbp/energy.hpp>
#include <lbbp/fem.hpp>
#include <lbbp/mesh.hpp>
#include <lbbp/mesh_io.hpp>
#include <lbbp/shapes.hpp>
#include <lbbp/stiefel.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

namespace lbbp::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols)
{
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

inline double relative_error(double a, double b)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Largest principal angle between the column spans of two orthonormal blocks.
/// Taken from the sine side, which stays accurate for tiny angles.
inline double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const Eigen::MatrixXd residual = b - a * (a.transpose() * b);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
    return std::asin(std::min(1.0, svd.singularValues().maxCoeff()));
}

/// Uniformly scaled copy of a mesh.
inline TriangleMesh scaled(const TriangleMesh& mesh, double factor)
{
    return TriangleMesh(mesh.vertices() * factor, mesh.faces(), mesh.options());
}

/// Sphere of radius `radius` and its radial deformation r = radius * exp(amplitude * z).
/// The vertex-for-vertex identity is the ground-truth map between the two.
struct SpherePair
{
    TriangleMesh source;
    TriangleMesh target;
};

inline SpherePair deformed_sphere_pair(int frequency, double radius, double amplitude)
{
    TriangleMesh source = scaled(shapes::icosphere(frequency), radius);
    TriangleMesh target = shapes::radial_deform(source, [=](const Eigen::Vector3d& p) {
        return radius * std::exp(amplitude * p.normalized().z());
    });
    return {std::move(source), std::move(target)};
}

/// `count` distinct random vertices, each paired with itself.
inline IndexPairs identity_landmarks(int n, int count, std::uint64_t seed)
{
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(all.begin(), all.end(), rng);
    IndexPairs pairs;
    for (int i = 0; i < count; ++i) pairs.emplace_back(all[i], all[i]);
    return pairs;
}

struct Instance
{
    RegistrationProblem problem;
    Eigen::VectorXd w;
    Eigen::MatrixXd psibar;
    double multiplier = 0.0;
};

/// Random instance on a 50-vertex target (k = 5, 7 features).
inline Instance random_instance(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.5, 1.5);
    const TriangleMesh target = shapes::flat_grid(10, 5, 3.0, 1.0);
    const int n = target.num_vertices(), k = 5, l = 7;

    Instance out;
    RegistrationProblem& p = out.problem;
    p.coefficients = testing::random_matrix(rng, l, k);
    p.target_mass = assemble_mass(target).diagonal();
    p.target_mass_sqrt = p.target_mass.cwiseSqrt();
    p.target_stiffness = assemble_stiffness(target);
    p.target_features = testing::random_matrix(rng, n, l);
    p.area = 2.7;

    out.w.resize(n);
    for (int i = 0; i < n; ++i) out.w(i) = uniform(rng);
    out.psibar = orthonormalize(testing::random_matrix(rng, n, k));
    out.multiplier = uniform(rng) - 1.0;
    return out;
}

} // namespace lbbp::testing
