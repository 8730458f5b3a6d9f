#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "brm/config.hpp"
#include "brm/errors.hpp"
#include "brm/output.hpp"
#include "brm/runner.hpp"

using namespace brm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("brm_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct Result {
  int status;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "brm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

}  // namespace

TEST_CASE("complex literals") {
  CHECK(parse_complex("1i") == cplx(0, 1));
  CHECK(parse_complex("-i") == cplx(0, -1));
  CHECK(parse_complex("0.4+3.2i") == cplx(0.4, 3.2));
  CHECK(parse_complex(" 0.4 - 3.2i ") == cplx(0.4, -3.2));
  CHECK(parse_complex("1e-3-2e+1i") == cplx(1e-3, -20));
  CHECK(parse_complex("2.5") == cplx(2.5, 0));
  CHECK_THROWS_AS(parse_complex("3+xi"), ConfigError);
  const cplx z(0.1, -1.0 / 3.0);
  CHECK(parse_complex(format_complex(z)) == z);
}

TEST_CASE("config grammar") {
  const auto s = parse_config(R"(
# comment line
[profile]
kind = power_law
param = 1.5     # trailing comment

[ensemble]
N = 201
b = 12.5
v = 2
seed = 18446744073709551615
truncation = 1e-10

[experiment]
command = correlation
replicas = 64
z1 = 0.4+3.2i, 5i
z2 = conj
)");
  CHECK(s.command == Subcommand::correlation);
  CHECK(s.ensemble.n == 100);
  CHECK(s.ensemble.profile.kind() == ProfileKind::power_law);
  CHECK(s.ensemble.profile.param() == 1.5);
  CHECK(s.ensemble.base_seed == 18446744073709551615ULL);
  CHECK(s.ensemble.truncation == 1e-10);
  REQUIRE(s.z2.size() == 2);
  CHECK(s.z2[1] == cplx(0, -5));

  const auto again = parse_config(to_config_text(s));
  CHECK(to_config_text(again) == to_config_text(s));
  CHECK(again.ensemble.b == s.ensemble.b);
  CHECK(again.z1 == s.z1);

  const auto inline_profile = parse_config(
      "[ensemble]\nprofile = {gaussian, 2}\nn = 50\nb = 5\n[experiment]\ncommand = theory-table\nz = 1i\n");
  CHECK(inline_profile.ensemble.profile.kind() == ProfileKind::gaussian);
  CHECK(inline_profile.ensemble.profile.param() == 2.0);

  const auto ranged = parse_config(
      "[ensemble]\nn = 500\nb = 51\n[experiment]\ncommand = local-scale\ndelta_range = 1e-4, 1e-2, 5\n");
  REQUIRE(ranged.delta.size() == 5);
  CHECK(ranged.delta[2] == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(ranged.delta[4] == 1e-2);
  CHECK(ranged.lambda == std::vector<double>{0.0});

  auto reason = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  CHECK(reason("[ensemble]\nn = 3\nb = 10\n[experiment]\ncommand = semicircle\n") == "b exceeds N");
  CHECK(reason("[ensemble]\nn = 3\nb = 2\nc = 1\n[experiment]\ncommand = semicircle\n").find("unknown key") !=
        std::string::npos);
  CHECK(reason("[oops]\n").find("unknown table") != std::string::npos);
  CHECK(reason("n = 3\n").find("outside a table") != std::string::npos);
  CHECK(reason("[ensemble]\nn = 3\nn = 4\n").find("duplicate") != std::string::npos);
  CHECK(reason("[ensemble]\nN = 4\n[experiment]\ncommand = semicircle\n").find("odd") != std::string::npos);
  CHECK(reason("[experiment]\ncommand = correlation\nreplicas = 8\n").find("16") != std::string::npos);
  CHECK(reason("[ensemble]\nn = 3\n").find("command") != std::string::npos);
}

TEST_CASE("checksummed tables") {
  CsvTable t("demo", {{"x", "1"}, {"y", "s"}});
  t.row().cell(1L).cell(0.5);
  t.row().cell(2L).cell(std::string_view("nan"));
  const auto text = t.render();
  CHECK(text.rfind("# demo\n# x [1]; y [s]\nx,y\n1,0.5\n2,nan\n# fnv1a64 ", 0) == 0);
  CHECK(verify_checksum(text));
  auto truncated = text.substr(0, text.size() - 30);
  CHECK_FALSE(verify_checksum(truncated));
  auto tampered = text;
  tampered[text.find("0.5")] = '9';
  CHECK_FALSE(verify_checksum(tampered));
}

TEST_CASE("cli: invalid config exits 2 with a single reason line") {
  const auto dir = scratch("bad");
  spit(dir / "bad.cfg", "[ensemble]\nn = 3\nb = 10\n[experiment]\ncommand = semicircle\n");
  const auto r = run({"--config", (dir / "bad.cfg").string(), "--out", (dir / "out").string()});
  CHECK(r.status == 2);
  CHECK(r.err == "config: b exceeds N\n");
  CHECK_FALSE(fs::exists(dir / "out" / "manifest.json"));
  CHECK(run({"--bogus"}).status == 2);
  CHECK(run({"semicircle"}).status == 2);
}

TEST_CASE("cli: theory table") {
  const auto dir = scratch("theory");
  spit(dir / "t.cfg",
       "[ensemble]\nprofile = {exponential, 1}\nn = 500\nb = 51\n[experiment]\ncommand = theory-table\n"
       "z1 = 1i, 0.4+3.2i\nz2 = -1i, 0.4-3.2i\n");
  const auto r = run({"theory-table", "--config", (dir / "t.cfg").string(), "--out", dir.string()});
  REQUIRE(r.status == 0);
  CHECK(r.err.find("warning: exploratory") != std::string::npos);
  const auto w = slurp(dir / "stieltjes.csv");
  CHECK(verify_checksum(w));
  CHECK(w.find("0,1,-0,0.61803398874989") != std::string::npos);
  const auto s = slurp(dir / "s_table.csv");
  CHECK(verify_checksum(s));
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "complete");
  CHECK(m["exploratory"] == true);
  CHECK(m["outputs"].size() == 2);
  CHECK(m["outputs"][0]["fnv1a64"] == w.substr(w.size() - 17, 16));
}

TEST_CASE("cli: manifest rerun reproduces result files") {
  const auto dir = scratch("rerun");
  spit(dir / "c.cfg",
       "[ensemble]\nprofile = {box, 1}\nn = 40\nb = 3\nseed = 9\n[experiment]\ncommand = correlation\n"
       "replicas = 20\nz1 = 0.4+3.2i\nz2 = conj\n");
  const auto a = run({"--config", (dir / "c.cfg").string(), "--out", (dir / "a").string(), "--threads", "3",
                      "--replicas", "24"});
  REQUIRE(a.status == 0);
  CHECK(a.err.find("warning: regime") != std::string::npos);
  const auto b = run({"--config", (dir / "a" / "manifest.json").string(), "--out", (dir / "b").string(),
                      "--threads", "1"});
  REQUIRE(b.status == 0);
  for (const char* f : {"traces.csv", "correlation.csv"}) {
    const auto x = slurp(dir / "a" / f);
    CHECK(verify_checksum(x));
    CHECK(x == slurp(dir / "b" / f));
  }
  const auto m = nlohmann::json::parse(slurp(dir / "b" / "manifest.json"));
  CHECK(m["replicas"] == 24);
  CHECK(m["base_seed"] == 9);
  const auto other = run({"--config", (dir / "a" / "manifest.json").string(), "--out",
                          (dir / "c").string(), "--seed", "10"});
  REQUIRE(other.status == 0);
  CHECK(slurp(dir / "c" / "traces.csv") != slurp(dir / "a" / "traces.csv"));
}

TEST_CASE("cli: numerical failure keeps the manifest and marks it failed") {
  const auto dir = scratch("fail");
  spit(dir / "l.cfg",
       "[ensemble]\nprofile = {exponential, 1}\nn = 500\nb = 51\n[experiment]\ncommand = local-scale\n"
       "lambda = 5\ndelta_range = 1e-4, 1e-2, 4\n");
  const auto r = run({"--config", (dir / "l.cfg").string(), "--out", dir.string()});
  CHECK(r.status == 3);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "failed");
  CHECK(m.contains("failure"));
}

TEST_CASE("bundled configs parse") {
  int count = 0;
  for (const auto& e : fs::directory_iterator(fs::path(BRM_SOURCE_DIR) / "tools" / "configs")) {
    if (e.path().extension() != ".cfg") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(load_config_file(e.path().string()));
    ++count;
  }
  CHECK(count >= 6);
}
