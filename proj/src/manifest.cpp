#include "matchcert/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "matchcert/util.hpp"

namespace matchcert {

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return hex64(h);
}

void RunManifest::add_param(const std::string& key, const std::string& value) {
    params.emplace_back(key, value);
}

void RunManifest::add_input(const std::string& path) {
    inputs.emplace_back(path, file_digest(path));
}

void RunManifest::add_output(const std::string& key, const std::string& value) {
    outputs.emplace_back(key, value);
}

std::string RunManifest::render() const {
    std::ostringstream out;
    out << "tool=" << kToolVersion << "\n";
    out << "command=" << command << "\n";
    for (const auto& [k, v] : params) out << "param." << k << "=" << v << "\n";
    for (const auto& [p, d] : inputs) out << "input." << p << "=" << d << "\n";
    for (const auto& [k, v] : outputs) out << "output." << k << "=" << v << "\n";
    out << "wall_seconds=" << fmt17(wall_seconds) << "\n";
    return out.str();
}

std::string RunManifest::content_digest() const { return hex64(fnv1a64(render())); }

std::string RunManifest::append_to(const std::string& path) const {
    namespace fs = std::filesystem;
    std::string target = path;
    if (target.empty() || (fs::exists(target) && fs::is_directory(target))) {
        fs::path dir = target.empty() ? fs::path("manifests") : fs::path(target);
        fs::create_directories(dir);
        target = (dir / (content_digest() + ".manifest")).string();
    }
    std::ofstream out(target, std::ios::app);
    if (!out) throw std::runtime_error("cannot open " + target + " for append");
    out << render() << "---\n";
    return target;
}

}  // namespace matchcert
