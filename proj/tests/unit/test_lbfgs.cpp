#include <doctest.h>

#include "support.hpp"

#include <lbbp/lbfgs.hpp>

using namespace lbbp;

namespace {

/// f(x) = 1/2 x^T A x - b^T x.
VectorObjective quadratic(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    return [a, b](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = a * x - b;
        return 0.5 * x.dot(a * x) - b.dot(x);
    };
}

} // namespace

TEST_CASE("quadratic minimiser")
{
    std::mt19937_64 rng(1);
    const int dim = 8;
    const Eigen::MatrixXd r = testing::random_matrix(rng, dim, dim);
    const Eigen::MatrixXd a = r * r.transpose() + Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::VectorXd b = testing::random_matrix(rng, dim, 1);
    const Eigen::VectorXd exact = a.ldlt().solve(b);

    LbfgsOptions options;
    options.max_iterations = 4 * dim;
    // Below ~1e-8 the decrease per step drops under the rounding of f.
    options.gradient_tolerance = 1e-7;
    options.relative_value_tolerance = 0.0;
    const LbfgsResult result = lbfgs_minimize(quadratic(a, b), Eigen::VectorXd::Zero(dim), options);
    CHECK(result.status == LbfgsStatus::GradientConverged);
    // |x - x*| <= |g| / lambda_min(A), and lambda_min(A) >= 1.
    CHECK((result.x - exact).norm() <= result.gradient.norm() * (1.0 + 1e-9));
    CHECK(result.gradient.cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(result.value <= 0.0);
}

TEST_CASE("Rosenbrock")
{
    const VectorObjective rosenbrock = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g.resize(2);
        g(0) = -400.0 * x(0) * (x(1) - x(0) * x(0)) - 2.0 * (1.0 - x(0));
        g(1) = 200.0 * (x(1) - x(0) * x(0));
        return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
    };
    LbfgsOptions options;
    options.max_iterations = 200;
    const LbfgsResult result = lbfgs_minimize(rosenbrock, Eigen::Vector2d(-1.2, 1.0), options);
    CHECK((result.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-6);
}

TEST_CASE("stationary start")
{
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
    const Eigen::VectorXd b = Eigen::Vector3d(1, 2, 3);
    const LbfgsResult result = lbfgs_minimize(quadratic(a, b), b);
    CHECK(result.iterations == 0);
    CHECK(result.x == b);
    CHECK(result.status == LbfgsStatus::GradientConverged);
}

TEST_CASE("lower bound is respected")
{
    // Unconstrained minimiser at -1 in every coordinate.
    const VectorObjective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = x.array() + 1.0;
        return 0.5 * (x.array() + 1.0).square().sum();
    };
    const LbfgsResult result = lbfgs_minimize(f, Eigen::VectorXd::Constant(4, 2.0), {}, lower_bound_step(0.5));
    CHECK(result.x.minCoeff() >= 0.5);
    CHECK(result.value < 0.5 * 4 * 9.0);
    CHECK(result.x.maxCoeff() < 0.6);
}

TEST_CASE("augmented Lagrangian on a toy constrained quadratic")
{
    // min (x1 - 2)^2 + (x2 - 1)^2 subject to x1 + x2 = 1; solution (1, 0).
    const double rho = 1.0;
    double b = 0.0;
    Eigen::VectorXd x = Eigen::Vector2d(0.0, 0.0);
    double previous = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < 30; ++outer) {
        const VectorObjective lagrangian = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
            const double c = z(0) + z(1) - 1.0 + b;
            g = Eigen::Vector2d(2.0 * (z(0) - 2.0) + rho * c, 2.0 * (z(1) - 1.0) + rho * c);
            return std::pow(z(0) - 2.0, 2) + std::pow(z(1) - 1.0, 2) + 0.5 * rho * c * c;
        };
        x = lbfgs_minimize(lagrangian, x).x;
        const double residual = x(0) + x(1) - 1.0;
        CHECK(std::abs(residual) <= std::abs(previous) + 1e-14);
        previous = residual;
        b += residual;
    }
    CHECK(std::abs(previous) < 1e-8);
    CHECK((x - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-7);
}

TEST_CASE("never returns a worse point")
{
    // Nonsmooth kink defeats the Wolfe conditions; the result must still not exceed f(x0).
    const VectorObjective kink = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = x.array().sign();
        return x.cwiseAbs().sum();
    };
    const Eigen::VectorXd x0 = Eigen::Vector3d(0.3, -0.2, 0.1);
    const LbfgsResult result = lbfgs_minimize(kink, x0);
    CHECK(result.value <= x0.cwiseAbs().sum());
}
