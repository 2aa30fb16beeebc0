#include "crthte/io.hpp"

#include <cstdio>
#include <fstream>

namespace crthte {

TrialDesign design_from_json(const nlohmann::json& j) {
    TrialDesign design;
    try {
        for (const auto& v : j.at("sizes")) {
            design.clusters.sizes.push_back(v.get<std::int64_t>());
        }
        design.i1 = j.at("i1").get<int>();
        for (const auto& v : j.at("theta")) {
            design.subgroups.theta.push_back(v.get<double>());
        }
        design.sigma_eps = j.at("sigma_eps").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::IoError,
             std::string("design JSON must have sizes, i1, theta, sigma_eps: ") +
                 e.what());
    }
    return design;
}

nlohmann::json design_to_json(const TrialDesign& design) {
    nlohmann::json j;
    j["sizes"] = design.clusters.sizes;
    j["i1"] = design.i1;
    j["theta"] = design.subgroups.theta;
    j["sigma_eps"] = design.sigma_eps;
    return j;
}

TrialDesign load_design(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open design config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::IoError, "invalid JSON in " + path + ": " + e.what());
    }
    return design_from_json(j);
}

namespace {

// FNV-1a, enough to link outputs to the manifest that produced them.
std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string RunManifest::hash() const {
    nlohmann::json stable;
    stable["command"] = command;
    stable["params"] = resolved_params;
    stable["seed"] = seed;
    stable["tool_version"] = tool_version;
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(stable.dump())));
    return buf;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config_path"] = config_path;
    j["resolved_params"] = resolved_params;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["outputs"] = outputs;
    j["duration_seconds"] = duration_seconds;
    j["hash"] = hash();
    return j;
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write manifest: " + path);
    out << to_json().dump(2) << "\n";
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace crthte
