#pragma once

#include <lbbp/config.hpp>
#include <lbbp/eigensolver.hpp>
#include <lbbp/energy.hpp>
#include <lbbp/features.hpp>
#include <lbbp/mesh.hpp>
#include <lbbp/mesh_io.hpp>

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lbbp {

/// One outer iteration. Row 0 holds the starting point.
struct TraceRow
{
    int iter = 0;
    /// Energy after the PAM step, before any reinitialisation.
    EnergyBreakdown energy;
    /// Multiplier the step was taken with, and the augmented Lagrangian at
    /// the start and end of the step under that multiplier.
    double multiplier = 0.0;
    double lagrangian_before = 0.0;
    double lagrangian_after = 0.0;
    /// (|dPsibar|^2 + |dw|^2) / (2 eta) in optimisation coordinates.
    double proximal = 0.0;
    double relative_update = 0.0;
    double orthonormality_error = 0.0;
    bool reinitialized = false;
    /// Total energy right after the reinitialisation, when one happened.
    double reinit_total = 0.0;

    /// lagrangian_after + proximal - lagrangian_before; <= 0 up to rounding.
    double descent_gap() const { return lagrangian_after + proximal - lagrangian_before; }
};

enum class Termination { Converged, MaxIterations };

const char* to_string(Termination termination);

struct LbbpState
{
    Eigen::VectorXd w;
    Eigen::MatrixXd psibar;
    double multiplier = 0.0;
    /// Iterate before the last step (the proximal anchors).
    Eigen::VectorXd w_prev;
    Eigen::MatrixXd psibar_prev;
    std::vector<TraceRow> trace;
    int iterations = 0;
    int reinit_count = 0;
    Termination termination = Termination::MaxIterations;
    /// Largest descent_gap over non-reinitialised steps.
    double max_descent_gap = -std::numeric_limits<double>::infinity();
    double max_orthonormality_error = 0.0;

    bool max_iterations_exceeded() const { return termination == Termination::MaxIterations; }
};

/// Starting point of a solve (full coordinates).
struct Iterate
{
    Eigen::VectorXd w;
    Eigen::MatrixXd psibar;
    double multiplier = 0.0;
};

/// Rebuilds the target features under a new w^2 (heat features only).
using FeatureRefresh = std::function<Eigen::MatrixXd(const Eigen::VectorXd& w2)>;

struct PamOptions
{
    int max_iterations = 1500;
    bool allow_reinit = true;
    FeatureRefresh refresh_features;
};

///
/// Proximal alternating minimisation in the given coordinates: a curvilinear
/// Stiefel search on Psibar, then L-BFGS on the augmented Lagrangian in w
/// followed by the multiplier update, reinitialising Psibar when the energy
/// stalls.
///
LbbpState run_pam(
    RegistrationProblem problem,
    const Coordinates& coordinates,
    Eigen::MatrixXd c0,
    Eigen::VectorXd d0,
    double multiplier,
    const LbbpConfig& config,
    const PamOptions& options);

/// Everything a registration needs, computed from two meshes and landmark pairs.
struct SolverInputs
{
    MassMatrix source_mass;
    SparseMatrix source_stiffness;
    Eigensystem source_eigs;
    /// Columns of the source eigensystem entering the energy (n1 x k).
    Eigen::MatrixXd phi;
    FeatureSet source_features;

    MassMatrix target_mass;
    SparseMatrix target_stiffness;
    Eigensystem target_eigs;
    Eigen::MatrixXd psi0;
    FeatureSet target_features;
    std::optional<TriangleMesh> target_mesh;

    RegistrationProblem problem() const;
    /// w = sqrt(A / A2), Psibar = orthonormalised L w Psi0.
    Iterate initial_iterate() const;
};

SolverInputs prepare_inputs(
    const TriangleMesh& source,
    const TriangleMesh& target,
    const IndexPairs& landmarks,
    const LbbpConfig& config);

struct WarmStart
{
    Iterate iterate;
    LbbpState reduced;
    int samples = 0;
    double diffusion_time = 0.0;
};

/// Solves the reduced problem in a heat-bump basis on farthest-point samples
/// of the target and lifts the result.
WarmStart warm_start(const SolverInputs& inputs, const Iterate& initial, const LbbpConfig& config);

struct LbbpResult
{
    LbbpState state;
    std::optional<WarmStart> warm;
    Eigen::MatrixXd psi_star;
    double warm_seconds = 0.0;
    double solve_seconds = 0.0;
};

/// Full pipeline from prepared inputs: optional warm start, then the full solve.
LbbpResult solve(const SolverInputs& inputs, const LbbpConfig& config);

/// Full solve from a given start, without warm start.
LbbpResult solve_from(const SolverInputs& inputs, const Iterate& start, const LbbpConfig& config);

/// Psi* = diag(w)^{-1} L^{-1} Psibar, or diag(w) L^{-1} Psibar when `literal`.
Eigen::MatrixXd recover_basis(
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const Eigen::VectorXd& target_mass,
    bool literal = false);

/// CSV with columns iter, coeff, eigen, harmonic, area_residual, total.
void save_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

} // namespace lbbp
