#include <lbbp/config.hpp>
#include <lbbp/errors.hpp>

#include <exception>
#include <fstream>
#include <set>
#include <string>

namespace lbbp {

using nlohmann::json;

namespace {

/// Reads keys of one JSON object, rejecting any key nobody asked for.
class Reader
{
public:
    Reader(const json& j, std::string where)
        : m_json(j)
        , m_where(std::move(where))
    {
        if (!j.is_object()) throw ConfigError(m_where + " must be an object");
    }

    ~Reader() noexcept(false)
    {
        if (std::uncaught_exceptions()) return;
        for (const auto& item : m_json.items()) {
            if (!m_seen.count(item.key())) throw ConfigError("unknown key '" + m_where + item.key() + "'");
        }
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        m_seen.insert(key);
        const auto it = m_json.find(key);
        if (it == m_json.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("bad value for '" + m_where + key + "': " + e.what());
        }
    }

    template <typename T>
    void get(const char* key, std::optional<T>& out)
    {
        m_seen.insert(key);
        const auto it = m_json.find(key);
        if (it == m_json.end()) return;
        if (it->is_null()) {
            out.reset();
            return;
        }
        T value{};
        get(key, value);
        out = value;
    }

    const json* child(const char* key)
    {
        m_seen.insert(key);
        const auto it = m_json.find(key);
        return it == m_json.end() ? nullptr : &*it;
    }

    std::string path(const char* key) const { return m_where + key + "."; }

private:
    const json& m_json;
    std::string m_where;
    std::set<std::string> m_seen;
};

template <typename T>
json optional_json(const std::optional<T>& value)
{
    return value ? json(*value) : json(nullptr);
}

void require(bool ok, const std::string& what)
{
    if (!ok) throw ConfigError(what);
}

} // namespace

void LbbpConfig::validate() const
{
    require(k >= 1, "k must be at least 1");
    require(weights.r1 >= 0.0 && weights.r2 >= 0.0 && weights.r3 >= 0.0 && weights.r4 >= 0.0,
            "penalty weights must be nonnegative");
    require(!eta || *eta > 0.0, "eta must be positive");
    require(alm_inner_iterations >= 1, "alm_inner_iterations must be at least 1");
    require(max_outer_iterations >= 0, "max_outer_iterations must be nonnegative");
    require(psi_inner_iterations >= 1, "psi_inner_iterations must be at least 1");
    require(w_floor > 0.0, "w_floor must be positive");
    require(energy_tolerance >= 0.0 && area_tolerance >= 0.0, "tolerances must be nonnegative");
    require(reinit.max_count >= 0 && reinit.min_gap >= 1 && reinit.eig_iterations >= 0, "bad reinit settings");
    require(warm_start.samples >= 0 && warm_start.iterations >= 0, "bad warm_start settings");
    require(!warm_start.diffusion_time || *warm_start.diffusion_time >= 0.0, "diffusion_time must be nonnegative");
    require(bfgs.memory >= 1 && bfgs.max_iterations >= 0, "bad bfgs settings");
    require(curvilinear.initial_step > 0.0 && curvilinear.max_backtracks >= 1, "bad curvilinear settings");
    require(eigen_tolerance > 0.0, "eigen_tolerance must be positive");
    require(!heat.dt || *heat.dt > 0.0, "heat dt must be positive");
}

void to_json(json& j, const LbbpConfig& c)
{
    j = json{
        {"k", c.k},
        {"r1", c.weights.r1},
        {"r2", c.weights.r2},
        {"r3", c.weights.r3},
        {"r4", c.weights.r4},
        {"eta", optional_json(c.eta)},
        {"alm_inner_iterations", c.alm_inner_iterations},
        {"max_outer_iterations", c.max_outer_iterations},
        {"psi_inner_iterations", c.psi_inner_iterations},
        {"w_floor", c.w_floor},
        {"energy_tolerance", c.energy_tolerance},
        {"area_tolerance", c.area_tolerance},
        {"include_constant_mode", c.include_constant_mode},
        {"literal_recovery", c.literal_recovery},
        {"eigen_tolerance", c.eigen_tolerance},
        {"seed", optional_json(c.seed)},
        {"features",
         {{"kind", to_string(c.features)}, {"dt", optional_json(c.heat.dt)}, {"steps", c.heat.steps}}},
        {"curvilinear",
         {{"initial_step", c.curvilinear.initial_step},
          {"max_backtracks", c.curvilinear.max_backtracks},
          {"armijo", c.curvilinear.armijo},
          {"backtrack_factor", c.curvilinear.backtrack_factor},
          {"nonmonotone_window", c.curvilinear.nonmonotone_window}}},
        {"bfgs",
         {{"memory", c.bfgs.memory},
          {"max_iterations", c.bfgs.max_iterations},
          {"gradient_tolerance", c.bfgs.gradient_tolerance},
          {"c1", c.bfgs.c1},
          {"c2", c.bfgs.c2}}},
        {"reinit",
         {{"tolerance", c.reinit.tolerance},
          {"max_count", c.reinit.max_count},
          {"min_gap", c.reinit.min_gap},
          {"eig_iterations", c.reinit.eig_iterations}}},
        {"warm_start",
         {{"enabled", c.warm_start.enabled},
          {"samples", c.warm_start.samples},
          {"diffusion_time", optional_json(c.warm_start.diffusion_time)},
          {"iterations", c.warm_start.iterations}}},
    };
}

void from_json(const json& j, LbbpConfig& c)
{
    Reader r(j, "");
    r.get("k", c.k);
    r.get("r1", c.weights.r1);
    r.get("r2", c.weights.r2);
    r.get("r3", c.weights.r3);
    r.get("r4", c.weights.r4);
    r.get("eta", c.eta);
    r.get("alm_inner_iterations", c.alm_inner_iterations);
    r.get("max_outer_iterations", c.max_outer_iterations);
    r.get("psi_inner_iterations", c.psi_inner_iterations);
    r.get("w_floor", c.w_floor);
    r.get("energy_tolerance", c.energy_tolerance);
    r.get("area_tolerance", c.area_tolerance);
    r.get("include_constant_mode", c.include_constant_mode);
    r.get("literal_recovery", c.literal_recovery);
    r.get("eigen_tolerance", c.eigen_tolerance);
    r.get("seed", c.seed);

    if (const json* f = r.child("features")) {
        Reader fr(*f, r.path("features"));
        std::string kind = to_string(c.features);
        fr.get("kind", kind);
        if (kind == "indicator") c.features = FeatureKind::Indicator;
        else if (kind == "heat") c.features = FeatureKind::HeatDiffusion;
        else throw ConfigError("features.kind must be 'indicator' or 'heat'");
        fr.get("dt", c.heat.dt);
        fr.get("steps", c.heat.steps);
    }
    if (const json* cv = r.child("curvilinear")) {
        Reader cr(*cv, r.path("curvilinear"));
        cr.get("initial_step", c.curvilinear.initial_step);
        cr.get("max_backtracks", c.curvilinear.max_backtracks);
        cr.get("armijo", c.curvilinear.armijo);
        cr.get("backtrack_factor", c.curvilinear.backtrack_factor);
        cr.get("nonmonotone_window", c.curvilinear.nonmonotone_window);
    }
    if (const json* b = r.child("bfgs")) {
        Reader br(*b, r.path("bfgs"));
        br.get("memory", c.bfgs.memory);
        br.get("max_iterations", c.bfgs.max_iterations);
        br.get("gradient_tolerance", c.bfgs.gradient_tolerance);
        br.get("c1", c.bfgs.c1);
        br.get("c2", c.bfgs.c2);
    }
    if (const json* re = r.child("reinit")) {
        Reader rr(*re, r.path("reinit"));
        rr.get("tolerance", c.reinit.tolerance);
        rr.get("max_count", c.reinit.max_count);
        rr.get("min_gap", c.reinit.min_gap);
        rr.get("eig_iterations", c.reinit.eig_iterations);
    }
    if (const json* ws = r.child("warm_start")) {
        Reader wr(*ws, r.path("warm_start"));
        wr.get("enabled", c.warm_start.enabled);
        wr.get("samples", c.warm_start.samples);
        wr.get("diffusion_time", c.warm_start.diffusion_time);
        wr.get("iterations", c.warm_start.iterations);
    }
}

LbbpConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
    LbbpConfig config;
    from_json(j, config);
    config.validate();
    return config;
}

} // namespace lbbp
