#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>

namespace lbbp {

/// Returns the value at x and writes the gradient.
using VectorObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& gradient)>;

/// Largest admissible step along a direction; +inf when unconstrained.
using StepBound = std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& direction)>;

struct LbfgsOptions
{
    int memory = 10;
    int max_iterations = 20;
    /// Stop once |g|_inf falls below this.
    double gradient_tolerance = 1e-10;
    /// Stop once |f_prev - f| <= tolerance * max(1, |f|).
    double relative_value_tolerance = 1e-14;
    /// Strong Wolfe constants.
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search = 25;
    /// Fraction of the feasibility bound a step may use.
    double boundary_fraction = 0.995;
};

enum class LbfgsStatus { GradientConverged, ValueConverged, MaxIterations, LineSearchFailed };

const char* to_string(LbfgsStatus status);

struct LbfgsResult
{
    Eigen::VectorXd x;
    double value = 0.0;
    Eigen::VectorXd gradient;
    int iterations = 0;
    int evaluations = 0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
};

///
/// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus cubic
/// zoom). Steps are capped by `bound`, so iterates never leave the feasible
/// set. The returned value never exceeds the value at x0; when no trial point
/// decreases the objective the run stops with LineSearchFailed.
///
LbfgsResult lbfgs_minimize(
    const VectorObjective& objective,
    Eigen::VectorXd x0,
    const LbfgsOptions& options = {},
    const StepBound& bound = {});

/// Step bound keeping every coordinate at or above `floor` (a fraction of the
/// remaining gap is used, so iterates approach the floor only geometrically).
StepBound lower_bound_step(double floor);

} // namespace lbbp
