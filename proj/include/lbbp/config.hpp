#pragma once

#include <lbbp/energy.hpp>
#include <lbbp/features.hpp>
#include <lbbp/lbfgs.hpp>
#include <lbbp/stiefel.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>

namespace lbbp {

struct WarmStartConfig
{
    bool enabled = true;
    /// Reduced basis size; 0 picks max(3k, n/6).
    int samples = 0;
    /// Heat-bump diffusion time; unset gives area / (4 nbar).
    std::optional<double> diffusion_time;
    /// Outer iteration budget of the reduced solve.
    int iterations = 150;
};

struct ReinitConfig
{
    /// Reinitialise once the relative change of the energy drops below this.
    double tolerance = 1e-4;
    int max_count = 5;
    /// Outer iterations between two reinitialisations.
    int min_gap = 10;
    /// Curvilinear iterations of the warm-started eigen-solve.
    int eig_iterations = 300;
};

struct LbbpConfig
{
    int k = 100;
    EnergyWeights weights;
    /// Proximal step; unset means 10 / (r1 + r2 + r3).
    std::optional<double> eta;
    /// Augmented-Lagrangian passes per outer iteration.
    int alm_inner_iterations = 1;
    int max_outer_iterations = 1500;
    /// Curvilinear steps per Psibar update.
    int psi_inner_iterations = 10;
    CurvilinearOptions curvilinear;
    LbfgsOptions bfgs;
    double w_floor = 1e-3;
    /// Stop when the relative energy update and the area residual are both small.
    double energy_tolerance = 1e-6;
    double area_tolerance = 1e-4;
    ReinitConfig reinit;
    WarmStartConfig warm_start;
    /// Keep the constant eigenfunction in Phi and Psi.
    bool include_constant_mode = false;
    /// Recover Psi* = diag(w) L^{-1} Psibar instead of diag(w)^{-1} L^{-1} Psibar.
    bool literal_recovery = false;
    FeatureKind features = FeatureKind::Indicator;
    HeatFeatureOptions heat;
    double eigen_tolerance = 1e-8;
    /// Seeds the sampling start vertex. The CLI requires it in the config file.
    std::optional<std::uint64_t> seed;

    double effective_eta() const { return eta.value_or(10.0 / (weights.r1 + weights.r2 + weights.r3)); }

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

void to_json(nlohmann::json& j, const LbbpConfig& config);
/// Unknown keys are rejected; missing keys keep their defaults.
void from_json(const nlohmann::json& j, LbbpConfig& config);

LbbpConfig load_config(const std::filesystem::path& path);

} // namespace lbbp
