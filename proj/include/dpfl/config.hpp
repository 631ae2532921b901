// Plain-text run configuration: `key = value` lines, '#' comments.
// Parse errors carry the file name and line number; unknown and missing
// keys are reported by name.
#pragma once

#include <string>

#include "dpfl/engine.hpp"

namespace dpfl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunConfig parse_run_config_text(const std::string& text, const std::string& name = "<config>");
RunConfig parse_run_config(const std::string& path);

// Canonical `key = value` rendering of a config (used by the summary output).
std::string render_run_config(const RunConfig& cfg);

}  // namespace dpfl
