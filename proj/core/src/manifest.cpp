#include "ercav/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "ercav/error.hpp"
#include "ercav/io.hpp"

namespace ercav::runio {
namespace {

using nlohmann::json;

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256: digest init failed");
    }
    void update(const char* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
    }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw std::runtime_error("sha256: final failed");
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 0xF];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open " + path.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (is) {
        is.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    return h.hex();
}

std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void record_outputs(RunManifest& m, const std::vector<std::string>& files) {
    const std::filesystem::path dir(m.output_dir);
    for (const auto& f : files) {
        const auto p = dir / f;
        m.outputs.push_back({f, std::filesystem::file_size(p), sha256_file(p)});
    }
}

std::filesystem::path write_manifest(const RunManifest& m) {
    json outputs = json::array();
    for (const auto& o : m.outputs) outputs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"sha256", o.sha256}});
    json doc = {{"version", 1},
                {"tool_version", m.tool_version},
                {"command", m.command},
                {"config_hash", m.config_hash},
                {"seed", m.seed},
                {"threads", m.threads},
                {"output_dir", m.output_dir},
                {"start_time", m.start_time},
                {"end_time", m.end_time},
                {"env_overrides", m.env_overrides},
                {"outputs", outputs}};
    const auto path = std::filesystem::path(m.output_dir) / kManifestName;
    io::write_file_atomic(path, doc.dump(2) + "\n");
    return path;
}

RunManifest read_manifest(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(io::read_file(path));
        RunManifest m;
        m.tool_version = doc.at("tool_version").get<std::string>();
        m.command = doc.at("command").get<std::string>();
        m.config_hash = doc.at("config_hash").get<std::string>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.threads = doc.at("threads").get<unsigned>();
        m.output_dir = doc.at("output_dir").get<std::string>();
        m.start_time = doc.at("start_time").get<std::string>();
        m.end_time = doc.at("end_time").get<std::string>();
        m.env_overrides = doc.at("env_overrides").get<std::map<std::string, std::string>>();
        for (const auto& o : doc.at("outputs"))
            m.outputs.push_back({o.at("path").get<std::string>(), o.at("bytes").get<std::uint64_t>(),
                                 o.at("sha256").get<std::string>()});
        return m;
    } catch (const json::exception& e) {
        throw InputError("manifest " + path.string() + " is malformed: " + e.what());
    }
}

VerifyReport verify_manifest(const std::filesystem::path& path) {
    const auto m = read_manifest(path);
    VerifyReport report;
    // Outputs are checked next to the manifest so a moved run directory still verifies.
    const auto dir = path.parent_path();
    for (const auto& o : m.outputs) {
        const auto p = dir / o.path;
        if (!std::filesystem::exists(p)) {
            report.problems.push_back(o.path + ": missing (hash mismatch)");
            continue;
        }
        const auto h = sha256_file(p);
        if (h != o.sha256) report.problems.push_back(o.path + ": hash mismatch, expected " + o.sha256 + ", got " + h);
    }
    report.ok = report.problems.empty();
    return report;
}

}  // namespace ercav::runio
