#pragma once

#include <map>
#include <string>

namespace pairforge::toml_lite {

// Minimal TOML subset for run configs: [section] and [section.sub] headers,
// key = value lines with basic strings (escape processing), literal
// strings, numbers, and booleans. Comments start with '#'. Values land in
// a flat "section.key" -> string map; numeric and boolean conversion is
// the caller's business.
//
// Errors: bad_config with the offending line number.
std::map<std::string, std::string> parse_file(const std::string& path);
std::map<std::string, std::string> parse_text(const std::string& text,
                                              const std::string& origin = "<config>");

}  // namespace pairforge::toml_lite
