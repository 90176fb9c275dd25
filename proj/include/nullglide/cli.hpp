#pragma once

#include "nullglide/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace nullglide {

// Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error, 3 threshold breach (--strict)
// or failed admissibility check.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

// Minimal SVG polyline plot; each polyline is a list of (x, y) points in data units.
std::string polyline_svg(const std::vector<std::vector<std::pair<double, double>>>& lines, const std::string& title);

}  // namespace nullglide
