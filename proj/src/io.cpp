#include "treeboot/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "treeboot/errors.hpp"

#include <json.hpp>

namespace treeboot {

std::string format_number(double v) {
    char buf[64];
    const auto res =
        std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& payload) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : payload) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

std::string csv_payload(const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_number(row[i]);
        }
        out << '\n';
    }
    return out.str();
}

std::string run_manifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["parameters"] = parameters;
    j["version"] = version;
    j["timestamp"] = timestamp;
    j["output"] = output_path;
    j["checksum_fnv1a64"] = checksum;
    return j.dump(2) + "\n";
}

namespace {

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

void write_artifact(const std::string& path, const std::string& payload,
                    run_manifest manifest) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open output file: " + path);
        out << payload;
        if (!out)
            throw std::runtime_error("failed writing output file: " + path);
    }
    manifest.output_path = path;
    manifest.checksum = fnv1a_hex(payload);
    if (manifest.timestamp.empty()) manifest.timestamp = iso_now();
    const std::string mpath = path + ".manifest.json";
    std::ofstream mout(mpath, std::ios::binary);
    if (!mout)
        throw std::runtime_error("cannot open manifest file: " + mpath);
    mout << manifest.to_json();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace treeboot
