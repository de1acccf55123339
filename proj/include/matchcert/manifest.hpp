#pragma once

#include <string>
#include <utility>
#include <vector>

namespace matchcert {

inline const char* kToolVersion = "matchcert 0.1.0";

// Reproducibility record for one CLI run: the command, every parameter,
// input digests, and the outputs, as plain key=value lines. Appended to a
// file so long runs stay auditable.
struct RunManifest {
    std::string command;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<std::pair<std::string, std::string>> inputs;   // path -> digest
    std::vector<std::pair<std::string, std::string>> outputs;  // key -> value
    double wall_seconds = 0.0;

    void add_param(const std::string& key, const std::string& value);
    void add_input(const std::string& path);  // digests the file
    void add_output(const std::string& key, const std::string& value);

    std::string render() const;
    std::string content_digest() const;  // fnv1a-64 of render()

    // Appends to `path`; when `path` is a directory (or empty), writes to
    // <dir>/<digest>.manifest instead. Returns the path written.
    std::string append_to(const std::string& path) const;
};

std::string file_digest(const std::string& path);

}  // namespace matchcert
