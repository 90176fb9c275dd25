#include <doctest.h>

#include "nullglide/cli.hpp"
#include "nullglide/io.hpp"
#include "support.hpp"

#include <filesystem>
#include <map>
#include <regex>
#include <sstream>

using namespace nullglide;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("nullglide-cli-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf = "") const { return (leaf.empty() ? path : path / leaf).string(); }
};

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

const EnvLookup kNoEnv = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };

Run cli(std::vector<std::string> args, const EnvLookup& env = kNoEnv) {
  std::ostringstream o, e;
  Run r;
  r.code = run_cli(args, o, e, env);
  r.out = o.str();
  r.err = e.str();
  return r;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& f : fs::directory_iterator(dir)) files[f.path().filename().string()] = read_text_file(f.path());
  return files;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("check passes on the unit cylinder and writes its artifacts") {
  TempDir d("check");
  const Run r = cli({"check", "--out", d.str()});
  CHECK(r.code == 0);
  CHECK(r.out.find("check: pass, min II = 1") != std::string::npos);
  CHECK(fs::exists(d.path / "admissibility.csv"));
  const Json j = Json::parse(read_text_file(d.path / "admissibility.json"));
  CHECK(j.at("pass") == true);
}

TEST_CASE("check fails with exit 3 on a null-concave boundary") {
  TempDir d("concave");
  std::string text = run_config_yaml(default_run_config());
  const auto pos = text.find("exterior: false");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 15, "exterior: true");
  write_text_file(d.path / "cfg.yaml", text);
  const Run r = cli({"--config", d.str("cfg.yaml"), "--out", d.str("o"), "check"});
  CHECK(r.code == 3);
  CHECK(r.out.find("check: fail") != std::string::npos);
}

TEST_CASE("synth then reconstruct: residual, deltas and manifest") {
  TempDir d("pipe");
  REQUIRE(cli({"synth", "--out", d.str()}).code == 0);
  const Run r = cli({"reconstruct", "--out", d.str()});
  REQUIRE(r.code == 0);
  const Json rec = Json::parse(read_text_file(d.path / "reconstruction.json"));
  CHECK(rec.at("schema") == "nullglide.reconstruction");
  CHECK(rec.at("truth") == "present");
  CHECK(rec.at("max_residual").get<double>() <= 1e-3);
  CHECK(!rec.at("recoverable").at("U").empty());
  const Json del = Json::parse(read_text_file(d.path / "deltas.json"));
  CHECK(del.at("max_cone_deviation").get<double>() <= 1e-3);
  CHECK(del.at("max_metric_error").get<double>() <= 1e-4);
  CHECK(del.at("mixed_patches") == 0);
  CHECK(del.at("inconsistent_groups") == 0);
  CHECK(del.at("breach") == false);

  const Json man = Json::parse(read_text_file(d.path / "manifest.json"));
  for (const char* f : {"blinded.json", "truth.json", "reconstruction.json", "deltas.json", "config.yaml"}) {
    CHECK(man.at("files").contains(f));
    CHECK(fs::exists(d.path / f));
  }
  CHECK(man.at("commands").contains("synth"));
  CHECK(man.at("commands").contains("reconstruct"));

  // The report picks up what is on disk.
  const Run rep = cli({"report", "--out", d.str()});
  CHECK(rep.code == 0);
  CHECK(fs::exists(d.path / "report.txt"));
  CHECK(rep.out == read_text_file(d.path / "report.txt"));
}

TEST_CASE("reconstruct runs without the truth sidecar") {
  TempDir d("blind");
  REQUIRE(cli({"synth", "--out", d.str()}).code == 0);
  fs::remove(d.path / "truth.json");
  const Run r = cli({"reconstruct", "--out", d.str(), "--strict"});
  CHECK(r.code == 0);
  CHECK(!fs::exists(d.path / "deltas.json"));
  const Json rec = Json::parse(read_text_file(d.path / "reconstruction.json"));
  CHECK(rec.at("truth") == "absent");
  CHECK(rec.dump().find("A_true") == std::string::npos);
}

TEST_CASE("gauge-test: measurements agree under the conformal gauge") {
  TempDir d("gauge");
  const Run r = cli({"gauge-test", "--out", d.str(), "--strict"});
  CHECK(r.code == 0);
  const Json j = Json::parse(read_text_file(d.path / "gauge.json"));
  CHECK(j.at("records").get<int>() > 100);
  CHECK(j.at("unmatched") == 0);
  CHECK(j.at("max_rel_dQ").get<double>() <= 1e-6);
}

TEST_CASE("runs are byte-identical across repetitions and worker counts") {
  TempDir a("det-a"), b("det-b");
  for (const auto& [dir, jobs] : {std::pair{a.str(), "1"}, std::pair{b.str(), "3"}}) {
    REQUIRE(cli({"synth", "--out", dir, "--jobs", jobs}).code == 0);
    REQUIRE(cli({"reconstruct", "--out", dir, "--jobs", jobs}).code == 0);
    REQUIRE(cli({"trace", "--out", dir, "--jobs", jobs}).code == 0);
  }
  const auto sa = snapshot(a.path), sb = snapshot(b.path);
  REQUIRE(sa.size() == sb.size());
  for (const auto& [name, content] : sa) {
    INFO(name);
    CHECK(sb.at(name) == content);
  }
}

TEST_CASE("floating output carries full round-trip precision") {
  TempDir d("digits");
  REQUIRE(cli({"trace", "--out", d.str()}).code == 0);
  const std::string csv = read_text_file(d.path / "events.csv");
  std::smatch m;
  REQUIRE(std::regex_search(csv, m, std::regex(R"(-?\d\.\d{15,16}(e-?\d+)?)")));
  const double v = std::stod(m.str());
  std::ostringstream os;
  os.precision(17);
  os << v;
  CHECK(std::stod(os.str()) == v);
}

TEST_CASE("configuration errors exit 2 and name the line") {
  TempDir d("cfg");
  write_text_file(d.path / "bad.yaml", "window:\n  tau_min: -2\n  tau_maks: 14\n");
  const Run r = cli({"--config", d.str("bad.yaml"), "check", "--out", d.str("o")});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.yaml:3:") != std::string::npos);
  CHECK(!fs::exists(d.path / "o"));

  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"check", "--jobs", "0"}).code == 2);

  const EnvLookup bad_env = [](const std::string& k) -> std::optional<std::string> {
    if (k == "NULLGLIDE_TOL_ODE") return "-3";
    return std::nullopt;
  };
  CHECK(cli({"check", "--out", d.str("o2")}, bad_env).code == 2);
}

TEST_CASE("--strict turns a threshold breach into exit 3") {
  TempDir d("strict");
  std::string text = run_config_yaml(default_run_config());
  const auto pos = text.find("metric_threshold: ");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, text.find('\n', pos) - pos, "metric_threshold: 1e-300");
  write_text_file(d.path / "cfg.yaml", text);
  const std::string out = d.str("o");
  REQUIRE(cli({"--config", d.str("cfg.yaml"), "synth", "--out", out}).code == 0);
  CHECK(cli({"--config", d.str("cfg.yaml"), "reconstruct", "--out", out}).code == 0);
  const Run strict = cli({"--config", d.str("cfg.yaml"), "reconstruct", "--out", out, "--strict"});
  CHECK(strict.code == 3);
  CHECK(strict.out.find("threshold breach") != std::string::npos);
}

TEST_CASE("reconstruct without measurements is a runtime error") {
  TempDir d("empty");
  const Run r = cli({"reconstruct", "--out", d.str()});
  CHECK(r.code == 1);
  CHECK(r.err.find("blinded measurements not found") != std::string::npos);
}

TEST_CASE("glide and lens write their tables") {
  TempDir d("glide");
  CHECK(cli({"glide", "--out", d.str()}).code == 0);
  CHECK(cli({"lens", "--out", d.str()}).code == 0);
  for (const char* f : {"gliding.csv", "gliding_polyline.csv", "gliding.svg", "lens.csv"}) CHECK(fs::exists(d.path / f));
  CHECK(read_text_file(d.path / "gliding.svg").rfind("<svg", 0) == 0);
}

TEST_CASE("polyline svg scales into the view box") {
  const std::string svg = polyline_svg({{{0.0, 0.0}, {1.0, 2.0}}, {{0.5, 1.0}}}, "t");
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(polyline_svg({}, "empty").find("</svg>") != std::string::npos);
}

}  // TEST_SUITE
