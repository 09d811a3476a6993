#include <lbbp/errors.hpp>
#include <lbbp/sampling.hpp>
#include <lbbp/solver.hpp>

#include <Eigen/SVD>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace lbbp {

const char* to_string(Termination termination)
{
    switch (termination) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Warm-started eigen-solve of Sbar(w) in the given coordinates. Unless the
/// constant mode is part of the basis, the kernel direction L w is pushed to
/// the top of the spectrum so it cannot enter.
Eigen::MatrixXd reinitialize(
    const RegistrationProblem& problem,
    const Coordinates& coords,
    const Eigen::MatrixXd& c,
    const Eigen::VectorXd& w,
    const LbbpConfig& config)
{
    const BlockOperator sbar = conformal_stiffness_operator(problem.target_stiffness, problem.target_mass, w);
    BlockOperator op = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
        return coords.pull_psibar(sbar(coords.psibar(x)));
    };
    if (!config.include_constant_mode) {
        Eigen::VectorXd z = coords.pull_psibar(Eigen::MatrixXd(w.cwiseProduct(problem.target_mass_sqrt)));
        z.normalize();
        const double mu = 2.0 * (c.array() * op(c).array()).sum() + 1.0;
        op = [op = std::move(op), z, mu](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
            return op(x) + mu * z * (z.transpose() * x);
        };
    }
    CurvilinearOptions options = config.curvilinear;
    options.max_iterations = config.reinit.eig_iterations;
    const Eigen::MatrixXd fresh = eig_via_stiefel(op, c, config.reinit.eig_iterations, options);

    // The eigen term is blind to rotations within the new span, so pick the
    // rotation that best matches the coefficients (orthogonal Procrustes).
    const Eigen::VectorXd scale = w.cwiseProduct(problem.target_mass_sqrt);
    const Eigen::MatrixXd fitted = problem.target_features.transpose() * (scale.asDiagonal() * coords.psibar(fresh));
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(fitted.transpose() * problem.coefficients,
                                                Eigen::ComputeFullU | Eigen::ComputeFullV);
    return fresh * (svd.matrixU() * svd.matrixV().transpose());
}

} // namespace

LbbpState run_pam(
    RegistrationProblem problem,
    const Coordinates& coords,
    Eigen::MatrixXd c,
    Eigen::VectorXd d,
    double b,
    const LbbpConfig& config,
    const PamOptions& options)
{
    const EnergyWeights& r = config.weights;
    const double eta = config.effective_eta();
    const double floor = config.w_floor;
    if (c.rows() != coords.dimension() || d.size() != coords.dimension()) {
        throw DimensionMismatch("starting coordinates do not match the coordinate map");
    }
    if (d.minCoeff() <= floor) throw NonpositiveConformalFactor("starting w lies on or below w_floor");

    LbbpState state;
    Eigen::VectorXd w = coords.w(d);
    Eigen::MatrixXd psibar = coords.psibar(c);

    TraceRow first;
    first.energy = energy(problem, w, psibar, r, b);
    first.multiplier = b;
    first.lagrangian_before = first.lagrangian_after = first.energy.lagrangian;
    first.orthonormality_error = orthonormality_error(psibar);
    state.trace.push_back(first);
    state.max_orthonormality_error = first.orthonormality_error;

    double tau = config.curvilinear.initial_step;
    int last_reinit = 0;
    state.termination = Termination::MaxIterations;

    for (int j = 1; j <= options.max_iterations; ++j) {
        const Eigen::MatrixXd c_anchor = c;
        const Eigen::VectorXd d_anchor = d;
        const double b_step = b;
        const double lagrangian_before = energy(problem, w, psibar, r, b_step).lagrangian;

        // Psibar block: curvilinear search on E(w^j, .) + proximal.
        MatrixObjective psi_objective = [&](const Eigen::MatrixXd& x, Eigen::MatrixXd& grad) {
            Eigen::MatrixXd g_full;
            const double value = energy_and_grad_psibar(problem, w, coords.psibar(x), r, g_full);
            const Eigen::MatrixXd delta = x - c_anchor;
            grad = coords.pull_psibar(g_full) + delta / eta;
            return value + delta.squaredNorm() / (2.0 * eta);
        };
        CurvilinearOptions curv = config.curvilinear;
        curv.initial_step = tau;
        CurvilinearSearch search(psi_objective, c, curv);
        search.run(config.psi_inner_iterations);
        c = search.x();
        if (search.iterations() > 0) tau = search.step_size();
        psibar = coords.psibar(c);

        // w block: augmented Lagrangian passes, each an L-BFGS solve plus a multiplier update.
        for (int s = 0; s < config.alm_inner_iterations; ++s) {
            VectorObjective w_objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
                if (!(x.minCoeff() > 0.0)) {
                    grad = Eigen::VectorXd::Zero(x.size());
                    return std::numeric_limits<double>::infinity();
                }
                Eigen::VectorXd g_full;
                const double value = lagrangian_and_grad_w(problem, coords.w(x), psibar, r, b, g_full);
                const Eigen::VectorXd delta = x - d_anchor;
                grad = coords.pull_w(g_full) + delta / eta;
                return value + delta.squaredNorm() / (2.0 * eta);
            };
            const LbfgsResult result = lbfgs_minimize(w_objective, d, config.bfgs, lower_bound_step(floor));
            d = result.x;
            w = coords.w(d);
            b += w.cwiseProduct(w).dot(problem.target_mass) - problem.area;
        }

        TraceRow row;
        row.iter = j;
        row.multiplier = b_step;
        row.energy = energy(problem, w, psibar, r, b);
        row.lagrangian_before = lagrangian_before;
        row.lagrangian_after = energy(problem, w, psibar, r, b_step).lagrangian;
        row.proximal = ((c - c_anchor).squaredNorm() + (d - d_anchor).squaredNorm()) / (2.0 * eta);
        row.orthonormality_error = orthonormality_error(psibar);
        const double previous_total = state.trace.back().reinitialized ? state.trace.back().reinit_total
                                                                       : state.trace.back().energy.total;
        row.relative_update =
            std::abs(previous_total - row.energy.total) / std::max(std::abs(previous_total), 1e-300);
        state.max_descent_gap = std::max(state.max_descent_gap, row.descent_gap());
        state.max_orthonormality_error = std::max(state.max_orthonormality_error, row.orthonormality_error);
        state.w_prev = coords.w(d_anchor);
        state.psibar_prev = coords.psibar(c_anchor);
        state.iterations = j;

        const bool area_ok = std::abs(row.energy.area_residual) <= config.area_tolerance * problem.area;
        const bool want_reinit = options.allow_reinit && state.reinit_count < config.reinit.max_count &&
                                 row.relative_update < config.reinit.tolerance;
        bool stop = false;
        if (want_reinit && j - last_reinit >= config.reinit.min_gap) {
            if (options.refresh_features) problem.target_features = options.refresh_features(w.cwiseProduct(w));
            c = reinitialize(problem, coords, c, w, config);
            psibar = coords.psibar(c);
            row.reinitialized = true;
            row.reinit_total = energy(problem, w, psibar, r, b).total;
            ++state.reinit_count;
            last_reinit = j;
            spdlog::debug("reinitialised at iteration {}: total {:.6e} -> {:.6e}", j, row.energy.total, row.reinit_total);
        } else if (!want_reinit && row.relative_update < config.energy_tolerance && area_ok) {
            stop = true;
        }
        state.trace.push_back(row);
        if (j % 50 == 0 || stop) {
            spdlog::debug("iter {:5d} total {:.10e} coeff {:.3e} eigen {:.6e} area {:.2e}", j, row.energy.total,
                          row.energy.coeff, row.energy.eigen, row.energy.area_residual);
        }
        if (stop) {
            state.termination = Termination::Converged;
            break;
        }
    }

    state.w = w;
    state.psibar = psibar;
    state.multiplier = b;
    if (state.w_prev.size() == 0) {
        state.w_prev = w;
        state.psibar_prev = psibar;
    }
    if (state.max_iterations_exceeded() && options.max_iterations > 0) {
        spdlog::warn("{}: stopped after {} outer iterations without meeting the tolerances",
                     to_string(ErrorCode::MaxIterationsExceeded), state.iterations);
    }
    return state;
}

RegistrationProblem SolverInputs::problem() const
{
    return RegistrationProblem::build(source_mass, phi, source_features.values, target_mass, target_stiffness,
                                      target_features.values);
}

Iterate SolverInputs::initial_iterate() const
{
    const double area = source_mass.diagonal().sum();
    const double target_area = target_mass.diagonal().sum();
    const double w0 = std::sqrt(area / target_area);
    Iterate it;
    it.w = Eigen::VectorXd::Constant(target_mass.rows(), w0);
    it.psibar = orthonormalize(target_mass.diagonal().cwiseSqrt().asDiagonal() * (w0 * psi0));
    return it;
}

SolverInputs prepare_inputs(
    const TriangleMesh& source,
    const TriangleMesh& target,
    const IndexPairs& landmarks,
    const LbbpConfig& config)
{
    config.validate();
    if (landmarks.empty()) throw EmptyFeatureSet("no landmark pairs");
    SolverInputs in;
    in.source_mass = assemble_mass(source);
    in.source_stiffness = assemble_stiffness(source);
    in.target_mass = assemble_mass(target);
    in.target_stiffness = assemble_stiffness(target);

    const int skip = config.include_constant_mode ? 0 : 1;
    const int count = config.k + skip;
    if (count >= std::min(source.num_vertices(), target.num_vertices())) {
        throw InvalidK("k = " + std::to_string(config.k) + " needs more vertices than the meshes have");
    }
    EigenOptions eig_options;
    eig_options.tolerance = config.eigen_tolerance;
    in.source_eigs = solve_eigs(in.source_stiffness, in.source_mass, count, eig_options);
    in.target_eigs = solve_eigs(in.target_stiffness, in.target_mass, count, eig_options);
    in.phi = in.source_eigs.vectors.rightCols(config.k);
    in.psi0 = in.target_eigs.vectors.rightCols(config.k);

    std::vector<int> src, tgt;
    for (const auto& [s, t] : landmarks) {
        src.push_back(s);
        tgt.push_back(t);
    }
    if (config.features == FeatureKind::Indicator) {
        in.source_features = indicator_features(source, src);
        in.target_features = indicator_features(target, tgt);
    } else {
        HeatFeatureOptions heat = config.heat;
        // One time step for both meshes so snapshot times agree.
        heat.dt = config.heat.dt.value_or(1e-3 * source.surface_area());
        heat.weight.reset();
        in.source_features = heat_features(source, in.source_mass, in.source_stiffness, src, heat);
        in.target_features = heat_features(target, in.target_mass, in.target_stiffness, tgt, heat);
    }
    in.target_mesh = target;
    return in;
}

WarmStart warm_start(const SolverInputs& inputs, const Iterate& initial, const LbbpConfig& config)
{
    if (!inputs.target_mesh) throw ConfigError("warm start needs the target mesh");
    const TriangleMesh& target = *inputs.target_mesh;
    const int n = target.num_vertices();
    const int nbar = config.warm_start.samples > 0 ? config.warm_start.samples : std::min(n, std::max(3 * config.k, n / 6));
    if (nbar < config.k) {
        throw InvalidLevelSpec("warm start needs at least k = " + std::to_string(config.k) + " samples, got " +
                               std::to_string(nbar));
    }
    if (nbar > n) throw InvalidLevelSpec("more warm-start samples than target vertices");

    std::vector<int> counts{n};
    if (nbar < n) counts.push_back(nbar);
    const SampleHierarchy hierarchy = farthest_point_sample(target, counts, config.seed.value_or(0));
    DiffusionBasisOptions basis_options;
    basis_options.time = config.warm_start.diffusion_time;
    const DiffusionBasis basis = build_diffusion_basis(inputs.target_mass, inputs.target_stiffness, hierarchy,
                                                       static_cast<int>(counts.size()) - 1, basis_options);
    const Coordinates coords(basis.u);

    const Eigen::MatrixXd c0 = coords.fit_psibar(initial.psibar);
    const Eigen::VectorXd d0 = basis.project(initial.w).col(0).cwiseMax(config.w_floor * 1.01);

    PamOptions options;
    options.max_iterations = config.warm_start.iterations;
    options.allow_reinit = false;

    WarmStart ws;
    ws.samples = nbar;
    ws.diffusion_time = basis.time;
    ws.reduced = run_pam(inputs.problem(), coords, c0, d0, initial.multiplier, config, options);
    ws.iterate.w = ws.reduced.w.cwiseMax(config.w_floor * 1.01);
    ws.iterate.psibar = orthonormalize(ws.reduced.psibar);
    ws.iterate.multiplier = ws.reduced.multiplier;
    return ws;
}

LbbpResult solve_from(const SolverInputs& inputs, const Iterate& start, const LbbpConfig& config)
{
    PamOptions options;
    options.max_iterations = config.max_outer_iterations;
    options.allow_reinit = true;
    if (inputs.target_features.kind == FeatureKind::HeatDiffusion) {
        options.refresh_features = [&inputs](const Eigen::VectorXd& w2) {
            return recompute_heat_features(inputs.target_features, inputs.target_mass, inputs.target_stiffness, w2)
                .values;
        };
    }
    const auto t0 = std::chrono::steady_clock::now();
    LbbpResult result;
    const Coordinates coords(static_cast<int>(inputs.target_mass.rows()));
    result.state = run_pam(inputs.problem(), coords, start.psibar, start.w, start.multiplier, config, options);
    result.psi_star = recover_basis(result.state.w, result.state.psibar, inputs.target_mass.diagonal(),
                                    config.literal_recovery);
    result.solve_seconds = seconds_since(t0);
    return result;
}

LbbpResult solve(const SolverInputs& inputs, const LbbpConfig& config)
{
    Iterate start = inputs.initial_iterate();
    std::optional<WarmStart> warm;
    double warm_seconds = 0.0;
    if (config.warm_start.enabled) {
        const auto t0 = std::chrono::steady_clock::now();
        warm = warm_start(inputs, start, config);
        warm_seconds = seconds_since(t0);
        start = warm->iterate;
    }
    LbbpResult result = solve_from(inputs, start, config);
    result.warm = std::move(warm);
    result.warm_seconds = warm_seconds;
    return result;
}

Eigen::MatrixXd recover_basis(
    const Eigen::VectorXd& w,
    const Eigen::MatrixXd& psibar,
    const Eigen::VectorXd& target_mass,
    bool literal)
{
    if (w.size() != psibar.rows() || target_mass.size() != psibar.rows()) {
        throw DimensionMismatch("w, Psibar and mass sizes differ");
    }
    const Eigen::VectorXd l_inv = target_mass.cwiseSqrt().cwiseInverse();
    const Eigen::VectorXd scale = literal ? Eigen::VectorXd(w.cwiseProduct(l_inv)) : Eigen::VectorXd(w.cwiseInverse().cwiseProduct(l_inv));
    return scale.asDiagonal() * psibar;
}

void save_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << std::setprecision(17) << "iter,coeff,eigen,harmonic,area_residual,total\n";
    for (const TraceRow& row : trace) {
        out << row.iter << ',' << row.energy.coeff << ',' << row.energy.eigen << ',' << row.energy.harmonic << ','
            << row.energy.area_residual << ',' << row.energy.total << '\n';
    }
}

} // namespace lbbp
