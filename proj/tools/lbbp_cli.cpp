// lbbp: command-line front end.
//
//   lbbp eigs      --mesh M --k K [--weight W] --out F [--csv C]
//   lbbp register  --source S --target T --landmarks L --config C --out DIR [--no-warm-start]
//   lbbp register  --batch JOBS [--jobs N]
//   lbbp evaluate  --corr C --truth T --target M --out DIR
//   lbbp sample    --mesh M --counts n1,n2,... --seed S --out F
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include "manifest.hpp"

#include <lbbp/config.hpp>
#include <lbbp/correspondence.hpp>
#include <lbbp/eigensolver.hpp>
#include <lbbp/errors.hpp>
#include <lbbp/evaluation.hpp>
#include <lbbp/fem.hpp>
#include <lbbp/mesh_io.hpp>
#include <lbbp/sampling.hpp>
#include <lbbp/solver.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_usage = 2;

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw lbbp::IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

void configure_logging()
{
    const char* level = std::getenv("LBBP_LOG_LEVEL");
    spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");
}

// ---------------------------------------------------------------- eigs

struct EigsArgs
{
    fs::path mesh;
    int k = 0;
    fs::path weight;
    fs::path out;
    fs::path csv;
};

int run_eigs(const EigsArgs& a)
{
    const lbbp::TriangleMesh mesh = lbbp::load_mesh(a.mesh);
    lbbp::MassMatrix mass = lbbp::assemble_mass(mesh);
    if (!a.weight.empty()) {
        const Eigen::VectorXd w2 = lbbp::load_scalars(a.weight);
        if (w2.size() != mesh.num_vertices()) throw lbbp::DimensionMismatch("weight file length differs from vertex count");
        mass = lbbp::weighted_mass(mass, w2);
    }
    if (a.k >= mesh.num_vertices()) {
        throw lbbp::InvalidK("k = " + std::to_string(a.k) + " must be below the vertex count " +
                             std::to_string(mesh.num_vertices()));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const lbbp::Eigensystem system = lbbp::solve_eigs(lbbp::assemble_stiffness(mesh), mass, a.k);
    spdlog::info("{} eigenpairs of {} in {:.3f}s, largest {:.6g}", a.k, a.mesh.string(), seconds_since(t0),
                 system.values(system.k() - 1));
    lbbp::save_eigensystem(a.out, system);
    if (!a.csv.empty()) lbbp::save_eigensystem_csv(a.csv, system);
    return exit_ok;
}

// ------------------------------------------------------------ register

struct RegisterArgs
{
    fs::path source;
    fs::path target;
    fs::path landmarks;
    fs::path config;
    fs::path out;
    bool no_warm_start = false;
};

json energy_json(const lbbp::EnergyBreakdown& e)
{
    return {{"coeff", e.coeff},
            {"eigen", e.eigen},
            {"harmonic", e.harmonic},
            {"area_residual", e.area_residual},
            {"total", e.total}};
}

void run_register(const RegisterArgs& a)
{
    fs::create_directories(a.out);
    lbbp::cli::RunManifest manifest("register");
    const fs::path manifest_path = a.out / "manifest.json";
    try {
        lbbp::LbbpConfig config = lbbp::load_config(a.config);
        if (!config.seed) throw lbbp::ConfigError("'seed' is required in the config file");
        if (a.no_warm_start) config.warm_start.enabled = false;
        manifest.set_flag("warm_start", config.warm_start.enabled);

        manifest.add_input("source", a.source);
        manifest.add_input("target", a.target);
        manifest.add_input("landmarks", a.landmarks);
        manifest.add_input("config", a.config);
        json resolved;
        lbbp::to_json(resolved, config);
        manifest.set_config(resolved);
        write_json(a.out / "config.json", resolved);
        manifest.add_output(a.out, "config.json");

        const auto t0 = std::chrono::steady_clock::now();
        const lbbp::TriangleMesh source = lbbp::load_mesh(a.source);
        const lbbp::TriangleMesh target = lbbp::load_mesh(a.target);
        const lbbp::IndexPairs landmarks = lbbp::load_index_pairs(a.landmarks);
        const lbbp::SolverInputs inputs = lbbp::prepare_inputs(source, target, landmarks, config);
        manifest.add_timing("setup", seconds_since(t0));

        const lbbp::LbbpResult result = lbbp::solve(inputs, config);
        manifest.add_timing("warm_start", result.warm_seconds);
        manifest.add_timing("solve", result.solve_seconds);

        const auto t1 = std::chrono::steady_clock::now();
        const lbbp::Correspondence corr = lbbp::point_to_point(inputs.phi, result.psi_star);
        manifest.add_timing("correspondence", seconds_since(t1));

        const lbbp::LbbpState& state = result.state;
        lbbp::save_correspondence(a.out / "correspondence.txt", corr);
        manifest.add_output(a.out, "correspondence.txt");
        lbbp::save_scalars(a.out / "w.txt", state.w);
        manifest.add_output(a.out, "w.txt");

        // Psi* is orthonormal against diag(w^2) M2; store it as that eigensystem.
        lbbp::Eigensystem psi;
        psi.vectors = result.psi_star;
        psi.weight = state.w.cwiseProduct(state.w).cwiseProduct(inputs.target_mass.diagonal());
        psi.values = (result.psi_star.array() * (inputs.target_stiffness * result.psi_star).array()).colwise().sum();
        lbbp::save_eigensystem(a.out / "psi.bin", psi);
        manifest.add_output(a.out, "psi.bin");

        lbbp::save_trace_csv(a.out / "trace.csv", state.trace);
        manifest.add_output(a.out, "trace.csv");

        json summary{
            {"iterations", state.iterations},
            {"reinit_count", state.reinit_count},
            {"termination", lbbp::to_string(state.termination)},
            {"max_iterations_exceeded", state.max_iterations_exceeded()},
            {"multiplier", state.multiplier},
            {"final_energy", energy_json(state.trace.back().energy)},
            {"max_descent_gap", state.max_descent_gap},
            {"max_orthonormality_error", state.max_orthonormality_error},
            {"timings", {{"warm_start", result.warm_seconds}, {"solve", result.solve_seconds}}},
        };
        if (result.warm) {
            summary["warm_start"] = {{"samples", result.warm->samples},
                                     {"diffusion_time", result.warm->diffusion_time},
                                     {"iterations", result.warm->reduced.iterations},
                                     {"final_energy", energy_json(result.warm->reduced.trace.back().energy)}};
        } else {
            summary["warm_start"] = nullptr;
        }
        write_json(a.out / "summary.json", summary);
        manifest.add_output(a.out, "summary.json");

        spdlog::info("{}: {} after {} iterations ({} reinitialisations), total energy {:.6g}", a.out.string(),
                     lbbp::to_string(state.termination), state.iterations, state.reinit_count,
                     state.trace.back().energy.total);
    } catch (const std::exception& e) {
        manifest.fail(e.what());
        try {
            manifest.save(manifest_path);
        } catch (const std::exception&) {
            // The original error matters more than the manifest.
        }
        throw;
    }
    manifest.save(manifest_path);
}

/// One job per non-empty line: source target landmarks config out.
std::vector<RegisterArgs> read_batch(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw lbbp::IoError("cannot open batch file '" + path.string() + "'");
    std::vector<RegisterArgs> jobs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::vector<std::string> parts;
        for (std::string part; fields >> part;) parts.push_back(part);
        if (parts.empty()) continue;
        if (parts.size() != 5) {
            throw lbbp::ParseError(path.string() + ":" + std::to_string(line_no) +
                                   ": expected 'source target landmarks config out'");
        }
        jobs.push_back({parts[0], parts[1], parts[2], parts[3], parts[4], false});
    }
    return jobs;
}

int run_batch(const fs::path& batch, int jobs, bool no_warm_start)
{
    std::vector<RegisterArgs> work = read_batch(batch);
    for (auto& job : work) job.no_warm_start = no_warm_start;
    std::atomic<size_t> next{0};
    std::atomic<int> failures{0};
    std::mutex err_mutex;
    auto worker = [&] {
        for (size_t i = next++; i < work.size(); i = next++) {
            try {
                run_register(work[i]);
            } catch (const std::exception& e) {
                ++failures;
                std::lock_guard<std::mutex> lock(err_mutex);
                std::cerr << "error: " << work[i].out.string() << ": " << e.what() << '\n';
            }
        }
    };
    const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(work.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    spdlog::info("batch: {} of {} registrations succeeded", work.size() - failures.load(), work.size());
    return failures ? exit_failure : exit_ok;
}

// ------------------------------------------------------------ evaluate

struct EvaluateArgs
{
    fs::path corr;
    fs::path truth;
    fs::path target;
    fs::path out;
};

int run_evaluate(const EvaluateArgs& a)
{
    fs::create_directories(a.out);
    lbbp::cli::RunManifest manifest("evaluate");
    manifest.add_input("correspondence", a.corr);
    manifest.add_input("truth", a.truth);
    manifest.add_input("target", a.target);

    const auto t0 = std::chrono::steady_clock::now();
    const lbbp::Correspondence corr = lbbp::load_correspondence(a.corr);
    const lbbp::Correspondence truth = lbbp::load_correspondence(a.truth);
    const lbbp::TriangleMesh target = lbbp::load_mesh(a.target);
    const lbbp::ErrorReport report = lbbp::geodesic_errors(corr, truth, target);
    manifest.add_timing("evaluate", seconds_since(t0));

    lbbp::save_error_curve_csv(a.out / "error_curve.csv", report);
    manifest.add_output(a.out, "error_curve.csv");
    lbbp::save_error_summary_json(a.out / "error_summary.json", report);
    manifest.add_output(a.out, "error_summary.json");
    lbbp::save_scalars(a.out / "errors.txt", report.errors);
    manifest.add_output(a.out, "errors.txt");
    manifest.save(a.out / "manifest.json");

    spdlog::info("exact {:.4f}, within 0.05 {:.4f}, mean {:.6g}", report.fraction_exact, report.fraction_within_5pct,
                 report.mean_error);
    return exit_ok;
}

// -------------------------------------------------------------- sample

struct SampleArgs
{
    fs::path mesh;
    std::vector<int> counts;
    std::uint64_t seed = 0;
    fs::path out;
};

int run_sample(const SampleArgs& a)
{
    const lbbp::TriangleMesh mesh = lbbp::load_mesh(a.mesh);
    std::vector<int> counts = a.counts;
    if (counts.empty() || counts.front() != mesh.num_vertices()) counts.insert(counts.begin(), mesh.num_vertices());
    const lbbp::SampleHierarchy h = lbbp::farthest_point_sample(mesh, counts, a.seed);

    json levels = json::array();
    for (size_t l = 0; l < h.levels.size(); ++l) {
        levels.push_back({{"vertices", h.levels[l]},
                          {"masses", std::vector<double>(h.masses[l].data(), h.masses[l].data() + h.masses[l].size())}});
    }
    write_json(a.out, {{"seed", a.seed}, {"levels", levels}});
    return exit_ok;
}

// lbbp::Error messages already lead with the error name.
int report(const std::exception& e)
{
    std::cerr << "error: " << e.what() << '\n';
    return exit_failure;
}

} // namespace

int main(int argc, char** argv)
{
    configure_logging();

    CLI::App app{"Conformal Laplace-Beltrami basis pursuit for surface registration"};
    app.require_subcommand(1);

    EigsArgs eigs;
    auto* eigs_cmd = app.add_subcommand("eigs", "Laplace-Beltrami eigenpairs of a mesh (constant mode first)");
    eigs_cmd->add_option("--mesh", eigs.mesh, "OFF/OBJ/PLY mesh")->required()->check(CLI::ExistingFile);
    eigs_cmd->add_option("--k", eigs.k, "number of eigenpairs")->required()->check(CLI::PositiveNumber);
    eigs_cmd->add_option("--weight", eigs.weight, "per-vertex w^2 values scaling the mass matrix")
        ->check(CLI::ExistingFile);
    eigs_cmd->add_option("--out", eigs.out, "binary eigensystem output")->required();
    eigs_cmd->add_option("--csv", eigs.csv, "optional CSV export");

    RegisterArgs reg;
    fs::path batch;
    int jobs = 1;
    auto* reg_cmd = app.add_subcommand("register", "Register a source mesh onto a target mesh");
    auto* batch_opt = reg_cmd->add_option("--batch", batch, "file of 'source target landmarks config out' lines")
                          ->check(CLI::ExistingFile);
    reg_cmd->add_option("--source", reg.source, "source mesh")->check(CLI::ExistingFile)->excludes(batch_opt);
    reg_cmd->add_option("--target", reg.target, "target mesh")->check(CLI::ExistingFile)->excludes(batch_opt);
    reg_cmd->add_option("--landmarks", reg.landmarks, "landmark pairs 'src tgt'")
        ->check(CLI::ExistingFile)
        ->excludes(batch_opt);
    reg_cmd->add_option("--config", reg.config, "JSON config (must set 'seed')")
        ->check(CLI::ExistingFile)
        ->excludes(batch_opt);
    reg_cmd->add_option("--out", reg.out, "output directory")->excludes(batch_opt);
    reg_cmd->add_flag("--no-warm-start", reg.no_warm_start, "skip the subsampled warm start");
    reg_cmd->add_option("--jobs", jobs, "concurrent registrations in batch mode")->check(CLI::PositiveNumber);

    EvaluateArgs eval;
    auto* eval_cmd = app.add_subcommand("evaluate", "Normalised geodesic errors against a ground-truth map");
    eval_cmd->add_option("--corr", eval.corr, "computed correspondence")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--truth", eval.truth, "ground-truth correspondence")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--target", eval.target, "target mesh")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", eval.out, "output directory")->required();

    SampleArgs sample;
    auto* sample_cmd = app.add_subcommand("sample", "Farthest-point sample hierarchy of a mesh");
    sample_cmd->add_option("--mesh", sample.mesh, "mesh")->required()->check(CLI::ExistingFile);
    sample_cmd->add_option("--counts", sample.counts, "strictly decreasing level sizes")
        ->required()
        ->delimiter(',');
    sample_cmd->add_option("--seed", sample.seed, "start-vertex seed")->required();
    sample_cmd->add_option("--out", sample.out, "JSON output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*eigs_cmd) return run_eigs(eigs);
        if (*reg_cmd) {
            if (!batch.empty()) return run_batch(batch, jobs, reg.no_warm_start);
            if (reg.source.empty() || reg.target.empty() || reg.landmarks.empty() || reg.config.empty() ||
                reg.out.empty()) {
                std::cerr << "register: --source, --target, --landmarks, --config and --out are required\n"
                          << reg_cmd->help();
                return exit_usage;
            }
            run_register(reg);
            return exit_ok;
        }
        if (*eval_cmd) return run_evaluate(eval);
        if (*sample_cmd) return run_sample(sample);
    } catch (const std::exception& e) {
        return report(e);
    }
    return exit_usage;
}
