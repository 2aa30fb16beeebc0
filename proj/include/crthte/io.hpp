#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "crthte/types.hpp"

namespace crthte {

inline constexpr const char* kToolVersion = "0.1.0";

// Design JSON schema (CLI contract): sizes (array of integers), i1 (integer),
// theta (array of reals), sigma_eps (real).
TrialDesign design_from_json(const nlohmann::json& j);
nlohmann::json design_to_json(const TrialDesign& design);
TrialDesign load_design(const std::string& path);

// ---------------------------------------------------------------------------
// RunManifest — provenance record written by every CLI command. The hash
// covers only the rerun-relevant fields (command, resolved parameters, seed,
// tool version) so reruns with the same inputs embed the same hash in their
// outputs even though wall-clock duration differs.
// ---------------------------------------------------------------------------
struct RunManifest {
    std::string command;
    std::string config_path;
    nlohmann::json resolved_params;
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;

    std::string hash() const;
    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

// Locale-independent numeric formatting shared by every CSV/JSON emitter.
std::string format_double(double v);

}  // namespace crthte
