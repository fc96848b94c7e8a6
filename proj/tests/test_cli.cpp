#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

/// Runs the installed binary with the given arguments, capturing stdout and
/// stderr together.
CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(FOCKDPP_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult res;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe))
    res.output.append(buf, n);
  const int raw = pclose(pipe);
  res.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return res;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fockdpp_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

json manifest_of(const fs::path& out) {
  return json::parse(slurp(out / "manifest.json"));
}

long data_rows(const fs::path& csv) {
  std::ifstream f(csv);
  REQUIRE(f.good());
  std::string line;
  long rows = 0;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first && line.find_first_not_of("-0123456789.eE+, \t") !=
                     std::string::npos) {
      first = false;
      continue;  // header
    }
    first = false;
    ++rows;
  }
  return rows;
}

}  // namespace

TEST_CASE("help exits 0 and lists the subcommands") {
  const CliResult r = run_cli("--help");
  CHECK(r.code == 0);
  CHECK(r.output.find("classify") != std::string::npos);
  CHECK(r.output.find("spectra-sweep") != std::string::npos);
}

TEST_CASE("unknown subcommand and bad flags exit 2") {
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("classify --alpha").code == 2);
  CHECK(run_cli("classify --no-such-flag 1").code == 2);
}

TEST_CASE("classify prints the dichotomy verdicts") {
  const fs::path out = fresh_dir("classify12");
  const CliResult r =
      run_cli("classify --alpha 1.2 --out " + out.string() + " --check");
  CHECK(r.code == 0);
  CHECK(r.output.find("Determinantal: Separated") != std::string::npos);
  CHECK(r.output.find("Poisson: NotSeparated") != std::string::npos);
  const json m = manifest_of(out);
  CHECK(m["status"] == "complete");
  CHECK(m["command"] == "classify");
  const json rep = json::parse(slurp(out / "reports" / "classify.json"));
  CHECK(rep["Determinantal"]["verdict"] == "Separated");
  CHECK(rep["Determinantal"]["conflict"] == false);
  CHECK(rep["config_hash"] == m["config_hash"]);

  const fs::path out2 = fresh_dir("classify20");
  const CliResult r2 =
      run_cli("classify --alpha 2.0 --out " + out2.string());
  CHECK(r2.code == 0);
  CHECK(r2.output.find("Determinantal: NotSeparated") != std::string::npos);
  CHECK(r2.output.find("Poisson: NotSeparated") != std::string::npos);
}

TEST_CASE("repeat runs produce byte-identical bundles") {
  const fs::path a = fresh_dir("rho_a");
  const fs::path b = fresh_dir("rho_b");
  CHECK(run_cli("rho --alpha 1.5 --window 20 --seed 9 --out " + a.string())
            .code == 0);
  CHECK(run_cli("rho --alpha 1.5 --window 20 --seed 9 --out " + b.string())
            .code == 0);
  for (const char* name :
       {"manifest.json", "scatter/rho.csv", "reports/rho.json"}) {
    CAPTURE(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const std::string stamp = slurp(a / "scatter" / "rho.csv").substr(0, 9);
  CHECK(stamp == "# config ");
}

TEST_CASE("config files apply with flags taking precedence") {
  const fs::path dir = fresh_dir("cfg");
  const fs::path cfg = dir / "run.cfg";
  {
    std::ofstream f(cfg);
    f << "# comment line\n";
    f << "alpha = 1.2\n";
    f << "seed = 77\n";
  }
  const fs::path out1 = dir / "from_file";
  const CliResult r1 = run_cli("classify --config " + cfg.string() +
                               " --out " + out1.string());
  CHECK(r1.code == 0);
  CHECK(r1.output.find("Determinantal: Separated") != std::string::npos);
  CHECK(std::stod(manifest_of(out1)["config"]["alpha"].get<std::string>()) ==
        doctest::Approx(1.2));
  CHECK(manifest_of(out1)["seed"] == 77);

  const fs::path out2 = dir / "flag_wins";
  const CliResult r2 = run_cli("classify --config " + cfg.string() +
                               " --alpha 2.0 --out " + out2.string());
  CHECK(r2.code == 0);
  CHECK(r2.output.find("Determinantal: NotSeparated") != std::string::npos);

  CHECK(run_cli("classify --config /tmp/does_not_exist.cfg --out " +
                (dir / "x").string())
            .code == 2);
  {
    std::ofstream f(cfg, std::ios::app);
    f << "unknown_key = 3\n";
  }
  CHECK(run_cli("classify --config " + cfg.string() + " --out " +
                (dir / "y").string())
            .code == 2);
}

TEST_CASE("dpp sample bundle round trips through analyze") {
  const fs::path out = fresh_dir("dpp_bundle");
  const CliResult r = run_cli(
      "sample-dpp --alpha 2 --rank 8 --samples 3 --seed 5 --check --out " +
      out.string());
  CHECK(r.code == 0);
  const json m = manifest_of(out);
  CHECK(m["status"] == "complete");
  for (int i = 0; i < 3; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "dpp_%05d", i);
    const fs::path csv = out / "samples" / (std::string(stem) + ".csv");
    CHECK(data_rows(csv) == 8);
    const json side =
        json::parse(slurp(out / "samples" / (std::string(stem) + ".json")));
    CHECK(side["kernel_rank"] == 8);
    CHECK(side["process"] == "dpp");
    CHECK(side["config_hash"] == m["config_hash"]);
  }
  const CliResult ra =
      run_cli("analyze --alpha 2 --metric euclid --out " + out.string());
  CHECK(ra.code == 0);
  const json rep = json::parse(slurp(out / "reports" / "analysis.json"));
  CHECK(rep["samples"].size() == 3);
  CHECK(rep["median_min_gap"].get<double>() > 0.0);

  const CliResult rdk =
      run_cli("analyze --alpha 2 --metric dk --out " + out.string());
  CHECK(rdk.code == 0);
  const json repdk = json::parse(slurp(out / "reports" / "analysis.json"));
  CHECK(repdk["metric"] == "dk");
  CHECK(repdk["median_min_gap"].get<double>() > 0.0);
  CHECK(repdk["median_min_gap"].get<double>() <= 1.0);
}

TEST_CASE("analyze on an empty bundle aborts with a staged manifest") {
  const fs::path out = fresh_dir("empty_bundle");
  const CliResult r = run_cli("analyze --alpha 2 --out " + out.string());
  CHECK(r.code == 2);
  const json m = manifest_of(out);
  CHECK(m["status"] == "incomplete");
  CHECK(m["error"]["stage"] == "analyze");
  CHECK(m["error"]["kind"] == "config");
}

TEST_CASE("poisson sampler bundle respects the window") {
  const fs::path out = fresh_dir("poisson_bundle");
  const CliResult r = run_cli(
      "sample-poisson --alpha 1.5 --window 4 --samples 2 --seed 3 --check "
      "--out " +
      out.string());
  CHECK(r.code == 0);
  const json m = manifest_of(out);
  CHECK(m["status"] == "complete");
  const json side = json::parse(slurp(out / "samples" / "poisson_00000.json"));
  CHECK(side["window"]["r_out"] == 4.0);
  CHECK(side["process"] == "poisson");
}

TEST_CASE("ginibre oracle bundle") {
  const fs::path out = fresh_dir("ginibre_bundle");
  const CliResult r = run_cli(
      "ginibre --rank 32 --samples 2 --seed 1 --check --out " + out.string());
  CHECK(r.code == 0);
  CHECK(data_rows(out / "samples" / "ginibre_00000.csv") == 32);
  const json rep = json::parse(slurp(out / "reports" / "ginibre.json"));
  CHECK(rep["n"] == 32);
}

TEST_CASE("spectra sweep emits the per-cell table") {
  const fs::path out = fresh_dir("sweep");
  const CliResult r = run_cli(
      "spectra-sweep --alpha 1.5 --nmax 15 --seed 2 --check --out " +
      out.string());
  CHECK(r.code == 0);
  const json m = manifest_of(out);
  CHECK(m["status"] == "complete");
  CHECK(data_rows(out / "cells.csv") >= 100);
  const json rep = json::parse(slurp(out / "reports" / "sweep.json"));
  CHECK(rep["rows"].get<long>() >= 100);
  CHECK(rep.contains("dpp_slope"));
  const std::string basis = slurp(out / "basis.csv");
  CHECK(basis.substr(0, 9) == "# config ");
}
