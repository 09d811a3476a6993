#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace lbbp::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Record of one CLI run: what went in, what came out, how long it took.
class RunManifest
{
public:
    explicit RunManifest(std::string command);

    void set_config(nlohmann::json config) { m_config = std::move(config); }
    void add_input(const std::string& role, const std::filesystem::path& path);
    /// Records an output file relative to the output directory, with its digest.
    void add_output(const std::filesystem::path& dir, const std::string& name);
    void add_timing(const std::string& name, double seconds);
    void set_flag(const std::string& name, nlohmann::json value) { m_flags[name] = std::move(value); }
    void fail(const std::string& error) { m_status = "failed", m_error = error; }

    const std::vector<std::string>& outputs() const { return m_output_names; }

    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;

private:
    std::string m_command;
    std::string m_status = "complete";
    std::string m_error;
    nlohmann::json m_config;
    nlohmann::json m_inputs = nlohmann::json::array();
    nlohmann::json m_outputs = nlohmann::json::array();
    nlohmann::json m_timings = nlohmann::json::object();
    nlohmann::json m_flags = nlohmann::json::object();
    std::vector<std::string> m_output_names;
};

} // namespace lbbp::cli
