#pragma once

#include <iosfwd>
#include <string>

#include "implctl/harness.hpp"

namespace implctl {

/// Version accepted by parse_scenario.
inline constexpr int kScenarioFormatVersion = 1;

/// Parses the line-oriented scenario format (see scenarios/README.md).
/// Throws ConfigError naming the offending key; the message carries the line number.
/// The result is not validated beyond parsing; call Scenario::validate().
Scenario parse_scenario(std::istream& is);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);

/// Writes a fully resolved scenario (every default spelled out). The output
/// parses back to an equal scenario.
std::string format_scenario(const Scenario& scn);

}  // namespace implctl
