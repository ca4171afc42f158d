#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sys/wait.h>
#include <unistd.h>

#include "cli.hpp"
#include "dgtau/error.hpp"

using namespace dgtau;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dgtau_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "dgtau");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::main_entry(static_cast<int>(argv.size()), argv.data());
}

void check_identical(const fs::path& a, const fs::path& b, const std::vector<std::string>& files) {
  for (const auto& f : files) {
    CAPTURE(f);
    REQUIRE(fs::exists(b / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

}  // namespace

TEST_CASE("tau range syntax") {
  CHECK(cli::parse_tau_range("0:4:5") == std::vector<double>{0, 1, 2, 3, 4});
  const auto g = cli::parse_tau_range("1:100:log3");
  REQUIRE(g.size() == 3u);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(g[2] == 100.0);
  for (const char* bad : {"1:2", "0:1:log4", "2:1:3", "0:1:1", "a:1:3", "0:1:3x", "0:1:2:3", "-1:1:3"})
    CHECK_THROWS_AS(cli::parse_tau_range(bad), InvalidInput);
}

TEST_CASE("config parsing") {
  const cli::RunConfig c = cli::config_from_json(
      {{"system", "acoustics2d"}, {"tau_range", "0:1:3"}, {"nx", 2}, {"ny", 3}, {"degree", 2}, {"beta", {0.5, 1.0}}});
  CHECK(c.system == "acoustics2d");
  CHECK(c.taus == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(c.ny == 3);
  CHECK(c.beta[0] == 0.5);
  const cli::RunConfig back = cli::config_from_json(cli::config_to_json(c));
  CHECK(cli::config_to_json(back) == cli::config_to_json(c));

  CHECK_THROWS_AS(cli::config_from_json({{"sytem", "acoustics2d"}}), InvalidInput);
  CHECK_THROWS_AS(cli::config_from_json({{"tau", 1.0}, {"taus", {1.0, 2.0}}}), InvalidInput);
  CHECK_THROWS_AS(cli::config_from_json({{"tau_range", "1:0:3"}}), InvalidInput);
  CHECK_THROWS_AS(cli::config_from_json({{"beta", {1.0}}}), InvalidInput);
  CHECK_THROWS_AS(cli::config_from_json({{"system", "euler"}}), InvalidInput);
  CHECK_THROWS_AS(cli::config_from_json({{"degree", -1}}), InvalidInput);
  CHECK_THROWS_AS(cli::config_from_json(io::Json::array()), InvalidInput);
}

TEST_CASE("reruns and replays are byte-identical") {
  cli::RunConfig c;
  c.system = "acoustics1d";
  c.elements = 4;
  c.degree = 2;
  c.taus = {0.0, 1.0, 10.0, 100.0};
  c.track = true;
  const fs::path a = scratch("a"), b = scratch("b");
  const cli::RunResult ra = cli::run_command("sweep", c, a);
  const cli::RunResult rb = cli::run_command("sweep", c, b);
  CHECK(ra.files == rb.files);
  CHECK(std::find(ra.files.begin(), ra.files.end(), "manifest.json") != ra.files.end());
  check_identical(a, b, ra.files);

  const fs::path r = scratch("replayed");
  const cli::RunResult rr = cli::replay_manifest(a / "manifest.json", r);
  CHECK(rr.files == ra.files);
  check_identical(a, r, ra.files);

  const io::Json m = io::read_json(a / "manifest.json");
  CHECK(m["command"] == "sweep");
  CHECK(m["config"]["taus"].size() == 4u);
  for (const auto& f : m["files"]) CHECK(fs::exists(a / f.get<std::string>()));
}

TEST_CASE("every command writes its artifacts") {
  struct Case {
    std::string command;
    cli::RunConfig config;
    std::vector<std::string> expect;
  };
  cli::RunConfig small;
  small.elements = 4;
  small.degree = 2;
  cli::RunConfig matrices = small;
  matrices.export_matrices = true;
  cli::RunConfig lemma = small;
  lemma.taus = cli::parse_tau_range("100:10000:log5");
  cli::RunConfig timed = small;
  timed.system = "acoustics1d";
  timed.steps = 20;
  cli::RunConfig dims;
  dims.system = "acoustics2d";
  dims.nx = dims.ny = 2;
  dims.degree = 2;
  for (const Case& k : {Case{"assemble", matrices, {"K.mtx", "M.mtx"}}, Case{"spectrum", small, {"spectrum.csv"}},
                        Case{"verify-lemma", lemma, {"lemma.json"}}, Case{"integrate", timed, {"energy.csv"}},
                        Case{"conforming-dims", dims, {"summary.json"}}}) {
    CAPTURE(k.command);
    const fs::path out = scratch("cmd_" + k.command);
    const cli::RunResult r = cli::run_command(k.command, k.config, out);
    for (const auto& f : k.expect) CHECK(fs::exists(out / f));
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(r.summary.is_object());
  }
  CHECK_THROWS_AS(cli::run_command("frobnicate", small, scratch("bad")), InvalidInput);
}

TEST_CASE("entry point exit codes and flag overrides") {
  const fs::path root = scratch("root");
  fs::create_directories(root);
  ::setenv("DGTAU_OUTPUT_ROOT", root.c_str(), 1);
  CHECK(cli::output_root() == root);

  const fs::path cfg = root / "cfg.json";
  io::write_json(cfg, {{"system", "advection1d"}, {"elements", 3}, {"degree", 1}, {"tau", 0.5}});
  CHECK(run({"spectrum", "--config", cfg.string(), "--degree", "2", "--output", "rel"}) == 0);
  const io::Json m = io::read_json(root / "rel" / "manifest.json");
  CHECK(m["config"]["degree"] == 2);
  CHECK(m["config"]["elements"] == 3);
  CHECK(m["config"]["taus"] == io::Json::array({0.5}));

  CHECK(run({"replay", (root / "rel" / "manifest.json").string()}) == 0);
  CHECK(fs::exists(root / "rel_replay" / "spectrum.csv"));
  CHECK(slurp(root / "rel" / "spectrum.csv") == slurp(root / "rel_replay" / "spectrum.csv"));

  CHECK(run({"spectrum", "--system", "euler", "--output", "x"}) == 2);
  CHECK(run({"spectrum", "--tau", "1", "--tau-range", "0:1:3", "--output", "x"}) == 2);
  CHECK(run({"spectrum", "--no-such-flag"}) == 2);
  CHECK(run({"preset", "fig99"}) == 2);
  std::ofstream(root / "broken.json") << "{";
  CHECK(run({"spectrum", "--config", (root / "broken.json").string()}) == 2);
  // Central flux has no conforming split to expand against.
  CHECK(run({"expand-mode", "--flux", "central", "--tau-range", "0:100:3", "--output", "y"}) != 0);
  ::unsetenv("DGTAU_OUTPUT_ROOT");
}

TEST_CASE("installed tool runs as a process") {
  const fs::path out = scratch("tool");
  const std::string cmd = std::string("\"") + DGTAU_TOOL + "\" conforming-dims --system acoustics2d --nx 2 --ny 2 " +
                          "--degree 2 --output \"" + out.string() + "\" > /dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  const io::Json s = io::read_json(out / "summary.json");
  CHECK_FALSE(s.empty());
  const int bad = std::system((std::string("\"") + DGTAU_TOOL + "\" spectrum --degree -2 2> /dev/null").c_str());
  REQUIRE(WIFEXITED(bad));
  CHECK(WEXITSTATUS(bad) == 2);
}
