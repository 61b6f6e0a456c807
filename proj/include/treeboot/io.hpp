#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace treeboot {

/// Shortest-or-17-significant-digit decimal rendering of a double; '.'
/// decimal separator regardless of locale, round-trips exactly.
std::string format_number(double v);

/// FNV-1a 64-bit checksum, hex encoded.
std::string fnv1a_hex(const std::string& payload);

/// RFC-4180-style CSV: header row, '\n' line ends, 17-significant-digit
/// numbers.
std::string csv_payload(const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows);

/// Run provenance sidecar written next to every output artifact.
struct run_manifest {
    std::string command;
    std::map<std::string, std::string> parameters;
    std::string version;
    std::string timestamp; // ISO-8601 UTC; not part of the payload checksum
    std::string output_path;
    std::string checksum; // fnv1a of the payload bytes

    std::string to_json() const;
};

/// Writes payload to path and a manifest to path + ".manifest.json".
void write_artifact(const std::string& path, const std::string& payload,
                    run_manifest manifest);

std::string read_file(const std::string& path);

} // namespace treeboot
