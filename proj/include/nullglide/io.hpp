#pragma once

#include "nullglide/region.hpp"
#include "nullglide/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace nullglide {

using Json = nlohmann::json;

// Shortest form is not used on purpose: every number is written with 17 significant digits.
std::string num(double v);
std::string num_list(const Vec& v, const char* sep = ",");

// Deterministic JSON text: object keys sorted, floats via num().
std::string dump_json(const Json& j, int indent = 1);

Json vec_json(const Vec& v);
Vec json_vec(const Json& j);
Json region_json(const Region& r);
Region json_region(const Json& j);

void write_text_file(const std::filesystem::path& p, const std::string& content);
std::string read_text_file(const std::filesystem::path& p);

}  // namespace nullglide
