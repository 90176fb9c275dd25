#include "nullglide/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nullglide {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string num_list(const Vec& v, const char* sep) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += num(v(i));
  }
  return out;
}

namespace {

void dump_rec(std::string& out, const Json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string end = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += pad;
        out += Json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        dump_rec(out, it.value(), indent, depth + 1);
      }
      out += end + '}';
      break;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      // Arrays of plain numbers stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && e.is_number();
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += flat ? ", " : ",";
        if (!flat) out += pad;
        dump_rec(out, j[i], indent, depth + 1);
      }
      out += flat ? "]" : end + ']';
      break;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw Error("non-finite number in JSON output");
      out += num(v);
      break;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(out, j, indent, 0);
  out += '\n';
  return out;
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec json_vec(const Json& j) {
  if (!j.is_array()) throw DataError("expected a numeric array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Json region_json(const Region& r) {
  Json box = Json::array();
  for (const auto& [lo, hi] : r.box) box.push_back(Json::array({lo, hi}));
  return {{"box", box}, {"periods", vec_json(r.periods)}};
}

Region json_region(const Json& j) {
  Region r;
  for (const auto& iv : j.at("box")) r.box.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
  r.periods = j.contains("periods") ? json_vec(j.at("periods")) : Vec::Zero(r.dim());
  return r;
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << content;
}

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace nullglide
