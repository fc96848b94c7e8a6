/// Command line driver: builds kernels, sweeps cells, samples processes, and
/// writes a reproducible report bundle (manifest.json, basis.csv, cells.csv,
/// samples/, reports/, scatter/).  Every artifact carries the config hash and
/// seed so identical configs reproduce byte-identical numeric output.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fockdpp/analysis.hpp"
#include "fockdpp/cells.hpp"
#include "fockdpp/kernel.hpp"
#include "fockdpp/rng.hpp"
#include "fockdpp/samplers.hpp"
#include "fockdpp/spectra.hpp"
#include "fockdpp/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fockdpp;

namespace {

struct Options {
  double alpha = 2.0;
  std::string weight_table;
  double window = 8.0;
  int rank = 0;  ///< 0 selects tolerance-driven truncation
  double tol = 1e-10;
  int nmax = 12;
  double scale = 1.0;
  int samples = 1;
  std::uint64_t seed = 1;
  std::string out = "fockdpp-out";
  std::string metric = "euclid";
  std::string process = "dpp";
  bool check = false;
  std::string config_file;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--alpha", o.alpha, "power weight exponent");
  cmd->add_option("--weight-table", o.weight_table,
                  "two-column (r, phi) file; overrides --alpha");
  cmd->add_option("--window", o.window, "window radius");
  cmd->add_option("--rank", o.rank, "kernel truncation rank");
  cmd->add_option("--tol", o.tol, "diagonal truncation tolerance");
  cmd->add_option("--nmax", o.nmax, "outermost cell annulus");
  cmd->add_option("--scale", o.scale, "cell grid scale");
  cmd->add_option("--samples", o.samples, "number of samples");
  cmd->add_option("--seed", o.seed, "base RNG seed");
  cmd->add_option("--out", o.out, "output bundle directory");
  cmd->add_option("--metric", o.metric, "gap metric")
      ->check(CLI::IsMember({"euclid", "dk"}));
  cmd->add_option("--process", o.process, "point process")
      ->check(CLI::IsMember({"dpp", "poisson"}));
  cmd->add_flag("--check", o.check, "run invariant checks; exit 4 on failure");
  cmd->add_option("--config", o.config_file,
                  "key = value config file (flags win)");
}

std::string trimmed(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// key = value file; a key is skipped when the same flag was given on the
/// command line, so flags always win.
void apply_config_file(Options& o, const CLI::App* cmd) {
  std::ifstream f(o.config_file);
  if (!f)
    throw Error(ErrorKind::Config,
                "cannot read config file: " + o.config_file);
  std::string line;
  long line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    line = trimmed(line);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Config, "config line " + std::to_string(line_no) +
                                         " is not key = value: " + line);
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    const std::string flag =
        "--" + (key == "weight_table" ? "weight-table" : key);
    try {
      if (cmd->count(flag) > 0) continue;
    } catch (const CLI::OptionNotFound&) {
      throw Error(ErrorKind::Config, "unknown config key: " + key);
    }
    try {
      if (key == "alpha")
        o.alpha = std::stod(value);
      else if (key == "weight_table" || key == "weight-table")
        o.weight_table = value;
      else if (key == "window")
        o.window = std::stod(value);
      else if (key == "rank")
        o.rank = std::stoi(value);
      else if (key == "tol")
        o.tol = std::stod(value);
      else if (key == "nmax")
        o.nmax = std::stoi(value);
      else if (key == "scale")
        o.scale = std::stod(value);
      else if (key == "samples")
        o.samples = std::stoi(value);
      else if (key == "seed")
        o.seed = std::stoull(value);
      else if (key == "out")
        o.out = value;
      else if (key == "metric")
        o.metric = value;
      else if (key == "process")
        o.process = value;
      else if (key == "check")
        o.check = value == "1" || value == "true";
      else
        throw Error(ErrorKind::Config, "unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::Config,
                  "bad value for config key " + key + ": " + value);
    } catch (const std::out_of_range&) {
      throw Error(ErrorKind::Config,
                  "bad value for config key " + key + ": " + value);
    }
  }
  if (o.metric != "euclid" && o.metric != "dk")
    throw Error(ErrorKind::Config, "metric must be euclid or dk");
  if (o.process != "dpp" && o.process != "poisson")
    throw Error(ErrorKind::Config, "process must be dpp or poisson");
}

std::string canonical_config(const Options& o, const std::string& command) {
  std::ostringstream s;
  s.precision(17);
  s << "command=" << command << "\nalpha=" << o.alpha << "\nweight_table="
    << o.weight_table << "\nwindow=" << o.window << "\nrank=" << o.rank
    << "\ntol=" << o.tol << "\nnmax=" << o.nmax << "\nscale=" << o.scale
    << "\nsamples=" << o.samples << "\nseed=" << o.seed << "\nmetric="
    << o.metric << "\nprocess=" << o.process << "\n";
  return s.str();
}

std::string fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

/// Run context shared between the stages of one invocation.
struct Run {
  Options opts;
  std::string command;
  std::string hash;
  fs::path out;
  json manifest;
  std::vector<std::string> check_failures;

  Run(const Options& o, const std::string& cmd) : opts(o), command(cmd) {
    hash = fnv1a_hash(canonical_config(o, cmd));
    out = fs::path(o.out);
    fs::create_directories(out / "samples");
    fs::create_directories(out / "reports");
    fs::create_directories(out / "scatter");
    manifest["command"] = cmd;
    manifest["config_hash"] = hash;
    manifest["seed"] = o.seed;
    json cfg;
    std::istringstream lines(canonical_config(o, cmd));
    std::string line;
    while (std::getline(lines, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos)
        cfg[line.substr(0, eq)] = line.substr(eq + 1);
    }
    manifest["config"] = cfg;
    manifest["outputs"] = json::array();
    manifest["status"] = "incomplete";
  }

  std::string stamp() const {
    return "# config " + hash + " seed " + std::to_string(opts.seed) + "\n";
  }

  void record(const fs::path& p) {
    manifest["outputs"].push_back(fs::relative(p, out).string());
  }

  void write_text(const fs::path& p, const std::string& body) {
    std::ofstream f(p);
    if (!f) throw Error(ErrorKind::Config, "cannot write " + p.string());
    f << stamp() << body;
    record(p);
  }

  void write_report(const std::string& name, const json& j) {
    json stamped = j;
    stamped["config_hash"] = hash;
    stamped["seed"] = opts.seed;
    const fs::path p = out / "reports" / name;
    std::ofstream f(p);
    if (!f) throw Error(ErrorKind::Config, "cannot write " + p.string());
    f << stamped.dump(2) << "\n";
    record(p);
  }

  void fail_check(const std::string& what) { check_failures.push_back(what); }

  void finish() {
    manifest["status"] = "complete";
    if (!check_failures.empty()) {
      manifest["check_failures"] = check_failures;
      manifest["status"] = "check-failed";
    }
    std::ofstream f(out / "manifest.json");
    f << manifest.dump(2) << "\n";
  }

  void abort_with(const std::string& stage, const Error& e) {
    manifest["status"] = "incomplete";
    manifest["error"] = {{"stage", stage},
                         {"kind", std::string(to_string(e.kind()))},
                         {"message", e.what()}};
    std::ofstream f(out / "manifest.json");
    f << manifest.dump(2) << "\n";
  }
};

Weight make_weight(const Options& o) {
  if (!o.weight_table.empty())
    return Weight::tabulated_from_file(o.weight_table);
  return Weight::power(o.alpha);
}

std::string verdict_word(Verdict v) {
  return v == Verdict::AlmostSurelySeparated ? "Separated" : "NotSeparated";
}

TruncatedKernel build_kernel(const Options& o, const Weight& w,
                             const std::shared_ptr<const RadiusField>& rf) {
  if (o.rank > 0) return build_kernel_with_rank(w, rf, o.rank, o.window);
  return build_kernel_for_window(w, rf, o.window, o.tol, 8192);
}

/// Radius by which the top feature of a rank-N kernel has decayed 80 nats
/// below its peak; a validity window this large covers the whole support of
/// the rank-N process.
double rank_window(const Weight& w, int rank) {
  const double n = static_cast<double>(rank - 1);
  double best = -std::numeric_limits<double>::infinity();
  for (double r = 0.05; r < 1e9; r *= 1.05) {
    const double v = n * std::log(r) - w.value(r);
    best = std::max(best, v);
    if (v < best - 80.0) return r * 1.05;
  }
  throw Error(ErrorKind::Numeric, "top kernel feature never decays");
}

// ---------------------------------------------------------------------------
// Stages.  Each one appends outputs to the run bundle.

void stage_classify(Run& run, const Weight& w,
                    const std::shared_ptr<const RadiusField>& rf) {
  json rep;
  for (Process p : {Process::Determinantal, Process::Poisson}) {
    const SeparationVerdict v = classify_separation(*rf, p);
    const char* name = p == Process::Determinantal ? "Determinantal" : "Poisson";
    std::cout << name << ": " << verdict_word(v.verdict) << "\n";
    json jv;
    jv["verdict"] = verdict_word(v.verdict);
    jv["tail_exponent"] = v.tail_exponent;
    jv["numeric_verdict"] =
        v.numeric_verdict == IntegralVerdict::Finite
            ? "finite"
            : (v.numeric_verdict == IntegralVerdict::Divergent ? "divergent"
                                                               : "inconclusive");
    if (v.integral_estimate) jv["integral_estimate"] = *v.integral_estimate;
    if (v.closed_form_separated)
      jv["closed_form_separated"] = *v.closed_form_separated;
    jv["conflict"] = v.conflict;
    rep[name] = jv;
    if (run.opts.check && v.conflict)
      run.fail_check(std::string(name) +
                     ": numeric verdict conflicts with closed form");
  }
  rep["weight"] = w.description();
  run.write_report("classify.json", rep);
}

void stage_rho(Run& run, const std::shared_ptr<const RadiusField>& rf) {
  const double top = run.opts.window;
  rf->ensure_table(top);
  std::ostringstream csv;
  csv.precision(17);
  csv << "r,rho\n";
  const int rows = 256;
  for (int i = 0; i <= rows; ++i) {
    const double r = top * i / rows;
    csv << r << "," << rf->rho_fast(r) << "\n";
  }
  run.write_text(run.out / "scatter" / "rho.csv", csv.str());

  json rep;
  rep["r_max"] = top;
  rep["rho_at_0"] = rf->rho_fast(0.0);
  rep["rho_at_r_max"] = rf->rho_fast(top);
  if (run.opts.check) {
    // 1-Lipschitz spot check on table-free exact values.
    Rng rng(run.opts.seed, 7);
    for (int i = 0; i < 200; ++i) {
      const double a = rng.uniform() * top, b = rng.uniform() * top;
      const double lhs = std::abs(rf->rho_radial(a) - rf->rho_radial(b));
      if (lhs > std::abs(a - b) + 1e-6) {
        run.fail_check("rho Lipschitz violation at radii " +
                       std::to_string(a) + ", " + std::to_string(b));
        break;
      }
    }
  }
  run.write_report("rho.json", rep);
}

void stage_kernel(Run& run, const Weight& w, const TruncatedKernel& k) {
  export_basis(k.basis(), (run.out / "basis.csv").string());
  {
    std::ifstream in(run.out / "basis.csv");
    std::stringstream body;
    body << in.rdbuf();
    in.close();
    std::ofstream outf(run.out / "basis.csv");
    outf << run.stamp() << body.str();
  }
  run.record(run.out / "basis.csv");
  std::vector<cplx> probes;
  for (int i = 1; i <= 64; ++i)
    probes.push_back(std::polar(run.opts.window * i / 64.0, 2.399963 * i));
  const auto [lo, hi] = kernel_diag_check(k, probes);
  json rep;
  rep["rank"] = k.rank();
  rep["window"] = k.window_radius();
  rep["log_c_phi"] = k.basis().log_c_phi;
  rep["diag_over_e2phi_min"] = lo;
  rep["diag_over_e2phi_max"] = hi;
  rep["weight"] = w.description();
  run.write_report("kernel.json", rep);
  if (run.opts.check && !(lo > 0.0 && hi / lo < 1e4))
    run.fail_check("kernel diagonal comparability bracket out of range");
}

void stage_sweep(Run& run, const TruncatedKernel& k) {
  CellPartition grid = CellPartition::standard();
  if (run.opts.scale > 1.0)
    grid = CellPartition::coarse(run.opts.scale);
  else if (run.opts.scale != 1.0)
    grid = CellPartition::refined(
        static_cast<int>(std::lround(1.0 / run.opts.scale)));

  std::ostringstream csv;
  csv.precision(17);
  csv << "n,k,center_abs,rho,trace,hs_norm_sq,p0,p1,p_geq2,p_geq2_second,"
         "lambda1_lb,lambda2_lb\n";
  long rows = 0;
  std::vector<CellRecord> table;
  for (long n = 1; n <= run.opts.nmax; ++n) {
    const CellRecord rec = sweep_ring(k, grid, n, true);
    table.push_back(rec);
    // Rotational symmetry: every sector of the ring shares the spectrum.
    for (long kk = 1; kk <= grid.sectors_in_ring(n); ++kk) {
      csv << n << "," << kk << "," << rec.center_abs << "," << rec.rho_center
          << "," << rec.trace << "," << rec.hs_norm_sq << "," << rec.p0 << ","
          << rec.p1 << "," << rec.p_geq2_exact << ","
          << rec.p_geq2_second_order << "," << rec.lambda1_lb << ","
          << rec.lambda2_lb << "\n";
      ++rows;
    }
    if (run.opts.check) {
      if (rec.trace <= 0.2) {
        const double second = rec.p_geq2_second_order;
        if (std::abs(rec.p_geq2_exact - second) >
            2.0 * rec.trace * rec.trace * rec.trace)
          run.fail_check("second-order expansion bound failed on ring " +
                         std::to_string(n));
      }
      if (rec.p_geq2_exact + 1e-15 <
          rec.lambda1_lb * rec.lambda2_lb * (1.0 - 1e-9))
        run.fail_check("witness product exceeds p_geq2 on ring " +
                       std::to_string(n));
    }
  }
  run.write_text(run.out / "cells.csv", csv.str());
  json rep;
  rep["rows"] = rows;
  rep["rings"] = run.opts.nmax;
  rep["scale"] = run.opts.scale;
  try {
    const ScalingReport sc = scaling_regression(table, 6.0);
    rep["dpp_slope"] = sc.slope;
    rep["dpp_r_squared"] = sc.r_squared;
    write_scatter_csv((run.out / "scatter" / "dpp_scaling.csv").string(), sc);
    run.record(run.out / "scatter" / "dpp_scaling.csv");
  } catch (const Error&) {
    rep["dpp_slope"] = nullptr;  // fewer than 10 cells pass the filter
  }
  run.write_report("sweep.json", rep);
}

PointConfiguration load_configuration(const fs::path& csv,
                                      const fs::path& sidecar) {
  PointConfiguration cfg;
  std::ifstream jf(sidecar);
  if (!jf)
    throw Error(ErrorKind::Config, "missing sidecar " + sidecar.string());
  json j = json::parse(jf);
  cfg.seed = j.value("seed", 0ULL);
  const std::string proc = j.value("process", "dpp");
  cfg.process = proc == "poisson"
                    ? SampleProcess::Poisson
                    : (proc == "ginibre" ? SampleProcess::GinibreOracle
                                         : SampleProcess::DPP);
  const json& wj = j.at("window");
  cfg.window = wj.at("kind") == "disk"
                   ? Window::disk(wj.at("r_out").get<double>())
                   : Window::annulus(wj.at("r_in").get<double>(),
                                     wj.at("r_out").get<double>());
  if (j.contains("kernel_rank")) cfg.kernel_rank = j["kernel_rank"].get<int>();

  std::ifstream cf(csv);
  if (!cf) throw Error(ErrorKind::Config, "missing sample " + csv.string());
  std::string line;
  while (std::getline(cf, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("re,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorKind::Config, "malformed sample row: " + line);
    cfg.points.emplace_back(std::stod(line.substr(0, comma)),
                            std::stod(line.substr(comma + 1)));
  }
  return cfg;
}

void export_sample(Run& run, const PointConfiguration& cfg,
                   const std::string& stem, const std::string& weight_desc) {
  const fs::path csv = run.out / "samples" / (stem + ".csv");
  const fs::path side = run.out / "samples" / (stem + ".json");
  export_configuration(cfg, csv.string(), side.string(), weight_desc);
  {
    std::ifstream in(csv);
    std::stringstream body;
    body << in.rdbuf();
    in.close();
    std::ofstream outf(csv);
    outf << run.stamp() << body.str();
  }
  {
    std::ifstream in(side);
    json j = json::parse(in);
    in.close();
    j["config_hash"] = run.hash;
    std::ofstream outf(side);
    outf << j.dump(2) << "\n";
  }
  run.record(csv);
  run.record(side);
}

void stage_sample_dpp(Run& run, const Weight& w,
                      const std::shared_ptr<const RadiusField>& rf) {
  const int rank = run.opts.rank > 0 ? run.opts.rank : 64;
  TruncatedKernel k = build_kernel_with_rank(w, rf, rank, rank_window(w, rank));
  const double support = dpp_support_radius(k);
  const Window window = run.opts.window > 0.0 ? Window::disk(run.opts.window)
                                              : Window::disk(support);
  for (int i = 0; i < run.opts.samples; ++i) {
    const PointConfiguration cfg =
        sample_dpp(k, window, run.opts.seed + static_cast<std::uint64_t>(i));
    char stem[32];
    std::snprintf(stem, sizeof stem, "dpp_%05d", i);
    export_sample(run, cfg, stem, w.description());
    if (run.opts.check && static_cast<int>(cfg.points.size()) != rank)
      run.fail_check(std::string(stem) + ": point count != kernel rank");
  }
  json rep;
  rep["rank"] = rank;
  rep["support_radius"] = support;
  rep["samples"] = run.opts.samples;
  run.write_report("sample_dpp.json", rep);
}

void stage_sample_poisson(Run& run, const Weight& w,
                          const std::shared_ptr<const RadiusField>& rf) {
  const Window window = Window::disk(run.opts.window);
  const double mass = sigma_mass(*rf, window);
  for (int i = 0; i < run.opts.samples; ++i) {
    const PointConfiguration cfg = sample_poisson(
        *rf, window, run.opts.seed + static_cast<std::uint64_t>(i));
    char stem[32];
    std::snprintf(stem, sizeof stem, "poisson_%05d", i);
    export_sample(run, cfg, stem, w.description());
    if (run.opts.check)
      for (cplx z : cfg.points)
        if (!window.contains(z)) {
          run.fail_check(std::string(stem) + ": point escaped the window");
          break;
        }
  }
  json rep;
  rep["sigma_mass"] = mass;
  rep["samples"] = run.opts.samples;
  run.write_report("sample_poisson.json", rep);
}

void stage_ginibre(Run& run) {
  const int n = run.opts.rank > 0 ? run.opts.rank : 256;
  for (int i = 0; i < run.opts.samples; ++i) {
    const PointConfiguration cfg =
        ginibre_oracle(n, run.opts.seed + static_cast<std::uint64_t>(i));
    char stem[32];
    std::snprintf(stem, sizeof stem, "ginibre_%05d", i);
    export_sample(run, cfg, stem, "ginibre oracle");
    if (run.opts.check && static_cast<int>(cfg.points.size()) != n)
      run.fail_check(std::string(stem) + ": eigenvalue count mismatch");
  }
  json rep;
  rep["n"] = n;
  rep["samples"] = run.opts.samples;
  run.write_report("ginibre.json", rep);
}

void stage_analyze(Run& run, const Weight& w,
                   const std::shared_ptr<const RadiusField>& rf) {
  std::vector<fs::path> csvs;
  const fs::path dir = run.out / "samples";
  if (fs::exists(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".csv") csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());
  if (csvs.empty())
    throw Error(ErrorKind::Config,
                "analyze: no samples/*.csv in " + run.out.string());

  const GapMetric metric =
      run.opts.metric == "dk" ? GapMetric::KernelDK : GapMetric::Euclidean;
  std::optional<TruncatedKernel> kernel;
  if (metric == GapMetric::KernelDK) {
    double r_max = run.opts.window;
    for (const fs::path& p : csvs) {
      PointConfiguration cfg = load_configuration(p, fs::path(p).replace_extension(".json"));
      r_max = std::max(r_max, cfg.window.r_out);
    }
    Options o = run.opts;
    o.window = r_max;
    o.rank = 0;
    kernel.emplace(build_kernel(o, w, rf));
  }

  json rep;
  rep["samples"] = json::array();
  std::vector<double> gaps;
  for (const fs::path& p : csvs) {
    const PointConfiguration cfg =
        load_configuration(p, fs::path(p).replace_extension(".json"));
    const SeparationReport sr =
        min_gap(cfg, metric, kernel ? &*kernel : nullptr);
    json js = json::parse(to_json_string(sr));
    js["file"] = p.filename().string();
    rep["samples"].push_back(js);
    const double g = metric == GapMetric::KernelDK ? sr.min_gap_dk
                                                   : sr.min_gap_euclidean;
    if (std::isfinite(g)) gaps.push_back(g);

    if (run.opts.check) {
      // Counting conservation against the standard partition.
      const auto counts = cell_counts(cfg, CellPartition::standard());
      long total = 0;
      for (const auto& [key, c] : counts) total += c;
      if (total != static_cast<long>(cfg.points.size()))
        run.fail_check(p.filename().string() + ": cell count conservation");
    }
  }
  if (!gaps.empty()) {
    std::sort(gaps.begin(), gaps.end());
    rep["median_min_gap"] = gaps[gaps.size() / 2];
  }
  rep["metric"] = run.opts.metric;
  run.write_report("analysis.json", rep);
}

int dispatch(Run& run) {
  const Weight w = make_weight(run.opts);
  auto rf = std::make_shared<RadiusField>(w);
  std::string stage = run.command;
  try {
    if (run.command == "classify") {
      stage_classify(run, w, rf);
    } else if (run.command == "rho") {
      stage_rho(run, rf);
    } else if (run.command == "kernel-build") {
      TruncatedKernel k = build_kernel(run.opts, w, rf);
      stage_kernel(run, w, k);
    } else if (run.command == "spectra-sweep") {
      Options o = run.opts;
      o.window = std::max(o.window, o.scale * (o.nmax + 1.0));
      stage = "kernel-build";
      TruncatedKernel k = build_kernel(o, w, rf);
      stage_kernel(run, w, k);
      stage = "spectra-sweep";
      stage_sweep(run, k);
    } else if (run.command == "sample-dpp") {
      stage_sample_dpp(run, w, rf);
    } else if (run.command == "sample-poisson") {
      stage_sample_poisson(run, w, rf);
    } else if (run.command == "ginibre") {
      stage_ginibre(run);
    } else if (run.command == "analyze") {
      stage_analyze(run, w, rf);
    } else if (run.command == "full-run") {
      stage = "classify";
      stage_classify(run, w, rf);
      stage = "kernel-build";
      Options o = run.opts;
      o.window = std::max(o.window, o.scale * (o.nmax + 1.0));
      TruncatedKernel k = build_kernel(o, w, rf);
      stage_kernel(run, w, k);
      stage = "spectra-sweep";
      stage_sweep(run, k);
      stage = "sample";
      if (run.opts.process == "poisson")
        stage_sample_poisson(run, w, rf);
      else
        stage_sample_dpp(run, w, rf);
      stage = "analyze";
      stage_analyze(run, w, rf);
    }
  } catch (const Error& e) {
    run.abort_with(stage, e);
    std::cerr << "error in stage " << stage << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? 2 : 3;
  }
  run.finish();
  if (!run.check_failures.empty()) {
    for (const std::string& f : run.check_failures)
      std::cerr << "check failed: " << f << "\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"determinantal point processes of generalized Fock spaces"};
  app.require_subcommand(1);
  Options opts;
  const std::vector<std::string> names{
      "classify",   "rho",       "kernel-build",
      "spectra-sweep", "sample-dpp", "sample-poisson",
      "ginibre",    "analyze",   "full-run"};
  const std::vector<std::string> descs{
      "separation dichotomy verdicts",
      "rho-function table",
      "kernel moment table and diagnostics",
      "per-cell restriction spectra sweep",
      "HKPV determinantal samples",
      "matched Poisson samples",
      "Ginibre eigenvalue oracle samples",
      "separation statistics over a sample bundle",
      "classify + kernel + sweep + samples + analysis"};
  for (std::size_t i = 0; i < names.size(); ++i)
    add_common(app.add_subcommand(names[i], descs[i]), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0; any parse failure is config
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    if (!opts.config_file.empty()) apply_config_file(opts, sub);
    Run run(opts, command);
    return dispatch(run);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
