#include "manifest.hpp"

#include <lbbp/errors.hpp>

#include <Eigen/Core>
#include <openssl/evp.h>
#include <spdlog/version.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#ifndef LBBP_VERSION
#define LBBP_VERSION "unknown"
#endif

namespace lbbp::cli {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "' for hashing");

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
    std::array<char, 1 << 16> buffer{};
    while (in) {
        in.read(buffer.data(), buffer.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);

    std::string hex;
    hex.reserve(2 * length);
    char byte[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

RunManifest::RunManifest(std::string command)
    : m_command(std::move(command))
{}

void RunManifest::add_input(const std::string& role, const std::filesystem::path& path)
{
    m_inputs.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_output(const std::filesystem::path& dir, const std::string& name)
{
    m_outputs.push_back({{"path", name}, {"sha256", sha256_file(dir / name)}});
    m_output_names.push_back(name);
}

void RunManifest::add_timing(const std::string& name, double seconds)
{
    m_timings[name] = seconds;
}

json RunManifest::to_json() const
{
    json j{
        {"command", m_command},
        {"status", m_status},
        {"versions",
         {{"lbbp", LBBP_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR) + "." +
                         std::to_string(SPDLOG_VER_PATCH)}}},
        {"config", m_config},
        {"inputs", m_inputs},
        {"outputs", m_outputs},
        {"timings", m_timings},
        {"flags", m_flags},
    };
    if (!m_error.empty()) j["error"] = m_error;
    return j;
}

void RunManifest::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << to_json().dump(2) << '\n';
}

} // namespace lbbp::cli
