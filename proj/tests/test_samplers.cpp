#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "fockdpp/analysis.hpp"
#include "fockdpp/errors.hpp"
#include "fockdpp/kernel.hpp"
#include "fockdpp/samplers.hpp"
#include "fockdpp/spectra.hpp"
#include "fockdpp/weights.hpp"

using namespace fockdpp;

namespace {

const double kPi = 3.14159265358979323846;

TruncatedKernel rank16_kernel() {
  auto rf = std::make_shared<const RadiusField>(Weight::power(2.0));
  return build_kernel_with_rank(Weight::power(2.0), rf, 16, 10.0);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= xs.size();
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= (xs.size() - 1.0);
  return {m, std::sqrt(v / xs.size())};
}

double sum_sq_radius(const PointConfiguration& c) {
  double acc = 0.0;
  for (cplx z : c.points) acc += std::norm(z);
  return acc;
}

}  // namespace

TEST_CASE("window membership and area") {
  Window d = Window::disk(2.0);
  CHECK(d.contains(cplx(1.0, 1.0)));
  CHECK_FALSE(d.contains(cplx(2.1, 0.0)));
  CHECK(d.area() == doctest::Approx(4.0 * kPi).epsilon(1e-12));
  Window a = Window::annulus(1.0, 2.0);
  CHECK_FALSE(a.contains(cplx(0.5, 0.0)));
  CHECK(a.contains(cplx(0.0, 1.5)));
  CHECK(a.area() == doctest::Approx(3.0 * kPi).epsilon(1e-12));
  CHECK_THROWS_AS(Window::annulus(2.0, 1.0), Error);
}

TEST_CASE("projection sampler returns exactly rank points, deterministically") {
  TruncatedKernel k = rank16_kernel();
  const Window win = Window::disk(10.0);
  PointConfiguration a = sample_dpp(k, win, 42);
  PointConfiguration b = sample_dpp(k, win, 42);
  PointConfiguration c = sample_dpp(k, win, 43);
  REQUIRE(a.points.size() == 16);
  REQUIRE(a.kernel_rank.has_value());
  CHECK(*a.kernel_rank == 16);
  CHECK(a.window.r_out == doctest::Approx(10.0));
  REQUIRE(b.points.size() == 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(a.points[i] == b.points[i]);
  bool differs = c.points.size() != a.points.size();
  for (std::size_t i = 0; !differs && i < 16; ++i)
    differs = a.points[i] != c.points[i];
  CHECK(differs);
  const double support = dpp_support_radius(k);
  for (cplx z : a.points) CHECK(std::abs(z) <= support + 1e-12);
}

TEST_CASE("sampler second moment matches the spectral prediction") {
  // E Σ|z_i|² = Σ_{n<N} c_{n+1}/c_n = N(N+1)/4 at α = 2; the Ginibre
  // eigenvalue oracle targets the same law, giving two independent routes.
  TruncatedKernel k = rank16_kernel();
  const Window win = Window::disk(10.0);
  std::vector<double> dpp, gin;
  for (int i = 0; i < 400; ++i) {
    dpp.push_back(sum_sq_radius(sample_dpp(k, win, 1000 + i)));
    gin.push_back(sum_sq_radius(ginibre_oracle(16, 2000 + i)));
  }
  const MeanSe d = mean_se(dpp);
  const MeanSe g = mean_se(gin);
  CHECK(std::abs(d.mean - 68.0) <= 5.0 * d.se);
  CHECK(std::abs(g.mean - 68.0) <= 5.0 * g.se);
}

TEST_CASE("radius distribution agrees with the Ginibre oracle") {
  TruncatedKernel k = rank16_kernel();
  const Window win = Window::disk(10.0);
  std::vector<double> a, b;
  for (int i = 0; i < 200; ++i) {
    for (cplx z : sample_dpp(k, win, 5000 + i).points) a.push_back(std::abs(z));
    for (cplx z : ginibre_oracle(16, 6000 + i).points) b.push_back(std::abs(z));
  }
  CHECK(ks_statistic(a, b) <= 0.05);
}

TEST_CASE("ginibre oracle basics") {
  PointConfiguration g = ginibre_oracle(1, 7);
  REQUIRE(g.points.size() == 1);
  CHECK(g.process == SampleProcess::GinibreOracle);
  std::vector<double> sq;
  for (int i = 0; i < 4000; ++i)
    sq.push_back(std::norm(ginibre_oracle(1, 100 + i).points[0]));
  const MeanSe m = mean_se(sq);
  CHECK(std::abs(m.mean - 0.5) <= 5.0 * m.se);
  PointConfiguration r = ginibre_oracle(1, 7);
  CHECK(r.points[0] == g.points[0]);
}

TEST_CASE("sigma mass closed form at alpha 2") {
  RadiusField rf(Weight::power(2.0));
  // ρ ≡ 1/(2√π) so σ(window) = 4π · area(window).
  CHECK(sigma_mass(rf, Window::disk(1.0)) ==
        doctest::Approx(4.0 * kPi * kPi).epsilon(1e-6));
  CHECK(sigma_mass(rf, Window::annulus(1.0, 2.0)) ==
        doctest::Approx(12.0 * kPi * kPi).epsilon(1e-6));
}

TEST_CASE("poisson sampler: determinism, membership, mean count") {
  RadiusField rf(Weight::power(2.0));
  const Window win = Window::disk(1.0);
  PointConfiguration a = sample_poisson(rf, win, 9);
  PointConfiguration b = sample_poisson(rf, win, 9);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i)
    CHECK(a.points[i] == b.points[i]);
  std::vector<double> counts;
  for (int i = 0; i < 400; ++i) {
    PointConfiguration c = sample_poisson(rf, win, 300 + i);
    for (cplx z : c.points) CHECK(win.contains(z));
    counts.push_back(static_cast<double>(c.points.size()));
  }
  const MeanSe m = mean_se(counts);
  CHECK(std::abs(m.mean - 4.0 * kPi * kPi) <= 5.0 * m.se);
}

TEST_CASE("poisson radial law matches the sigma density in an annulus") {
  // P(|z| ≤ t) restricted to an annulus is (t² - r_in²)/(r_out² - r_in²)
  // for constant ρ; compare empirical radii against that CDF by KS.
  RadiusField rf(Weight::power(2.0));
  const Window win = Window::annulus(1.0, 2.0);
  std::vector<double> radii;
  for (int i = 0; i < 200; ++i)
    for (cplx z : sample_poisson(rf, win, 800 + i).points)
      radii.push_back(std::abs(z));
  REQUIRE(radii.size() > 2000);
  std::vector<double> model;
  const int m = static_cast<int>(radii.size());
  for (int i = 0; i < m; ++i) {
    const double u = (i + 0.5) / m;
    model.push_back(std::sqrt(1.0 + 3.0 * u));
  }
  CHECK(ks_statistic(radii, model) <= 0.05);
}

TEST_CASE("empirical cell statistics match the Bernoulli decomposition") {
  // Cross-module check: counts of sampled configurations in D(0, 0.8)
  // against trace and P(≥2) from the restriction spectrum.
  TruncatedKernel k = rank16_kernel();
  const Cell cell = Cell::disk(0.0, 0.8);
  RestrictionSpectrum s = restriction_spectrum(k, cell);
  const CellProbabilities pred = cell_probabilities(s);
  const Window win = Window::disk(10.0);
  const int n = 800;
  std::vector<double> counts, geq2;
  for (int i = 0; i < n; ++i) {
    PointConfiguration c = sample_dpp(k, win, 42000 + i);
    long inside = 0;
    for (cplx z : c.points)
      if (std::abs(z) <= 0.8) ++inside;
    counts.push_back(static_cast<double>(inside));
    geq2.push_back(inside >= 2 ? 1.0 : 0.0);
  }
  const MeanSe mc = mean_se(counts);
  const MeanSe m2 = mean_se(geq2);
  CHECK(std::abs(mc.mean - pred.expected_count) <= 5.0 * mc.se);
  CHECK(std::abs(m2.mean - pred.p_geq2_exact) <= 5.0 * m2.se + 1e-4);
}

TEST_CASE("restrict_to_window drops outside points") {
  PointConfiguration c;
  c.points = {cplx(0.1, 0.0), cplx(1.5, 0.0), cplx(0.0, 0.4)};
  c.window = Window::disk(2.0);
  c.process = SampleProcess::Poisson;
  PointConfiguration r = restrict_to_window(c, Window::disk(1.0));
  REQUIRE(r.points.size() == 2);
  CHECK(r.window.r_out == doctest::Approx(1.0));
  for (cplx z : r.points) CHECK(std::abs(z) <= 1.0);
}

TEST_CASE("radial cdf tables invert monotonically and reject bad input") {
  RadiusField rf(Weight::power(1.5));
  detail::RadialCdf t = detail::build_radial_cdf(rf, 0.5, 3.0, 512);
  REQUIRE(t.mass.size() == t.radius.size());
  for (std::size_t i = 1; i < t.mass.size(); ++i)
    CHECK(t.mass[i] > t.mass[i - 1]);
  const double total = t.mass.back();
  double prev = 0.0;
  for (double u : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    const double r = detail::invert_radial_cdf(t, u * total);
    CHECK(r >= prev - 1e-12);
    CHECK(r >= 0.5 - 1e-9);
    CHECK(r <= 3.0 + 1e-9);
    prev = r;
  }
  detail::RadialCdf bad;
  bad.mass = {0.0, 1.0, 0.5};
  bad.radius = {0.0, 1.0, 2.0};
  CHECK_THROWS_AS(detail::invert_radial_cdf(bad, 0.7), Error);
}

TEST_CASE("configuration export round trip") {
  TruncatedKernel k = rank16_kernel();
  PointConfiguration c = sample_dpp(k, Window::disk(10.0), 314);
  const std::string csv = "/tmp/fockdpp_cfg.csv";
  const std::string js = "/tmp/fockdpp_cfg.json";
  export_configuration(c, csv, js, "power alpha=2");
  std::ifstream jf(js);
  REQUIRE(jf.good());
  nlohmann::json meta = nlohmann::json::parse(jf);
  CHECK(meta["seed"].get<std::uint64_t>() == 314);
  CHECK(meta["process"].get<std::string>() == to_string(SampleProcess::DPP));
  CHECK(meta["n_points"].get<long>() == 16);
  std::ifstream cf(csv);
  REQUIRE(cf.good());
  std::string line;
  long rows = 0;
  while (std::getline(cf, line)) {
    if (line.empty() || line[0] == '#' ||
        line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos)
      continue;
    ++rows;
  }
  CHECK(rows == 16);
}
