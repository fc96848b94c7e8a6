#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "fockdpp/errors.hpp"
#include "fockdpp/kernel.hpp"
#include "fockdpp/rng.hpp"
#include "fockdpp/weights.hpp"

using namespace fockdpp;

namespace {

const double kPi = 3.14159265358979323846;

std::shared_ptr<const RadiusField> field(double alpha) {
  return std::make_shared<const RadiusField>(Weight::power(alpha));
}

/// Plain Simpson rule on [0, hi]; an independent quadrature route from the
/// library's adaptive log-domain panels.
double simpson(const std::function<double(double)>& f, double hi, int n) {
  double acc = f(0.0) + f(hi);
  for (int i = 1; i < n; ++i)
    acc += f(hi * i / n) * (i % 2 ? 4.0 : 2.0);
  return acc * hi / (3.0 * n);
}

}  // namespace

TEST_CASE("alpha 2 moments match n!/2^n and c_phi = 1/(2 pi^2)") {
  auto rf = field(2.0);
  KernelBasis b = compute_moments(rf->weight(), *rf, 24);
  REQUIRE(b.rank == 24);
  CHECK(b.log_moments[0] == doctest::Approx(0.0).epsilon(1e-12));
  for (int n = 0; n < 24; ++n) {
    const double expect = std::lgamma(n + 1.0) - n * std::log(2.0);
    CHECK(b.log_moments[n] == doctest::Approx(expect).epsilon(1e-8));
  }
  CHECK(b.log_c_phi == doctest::Approx(-2.9826069457893283).epsilon(1e-9));
}

TEST_CASE("moment sequence is log-convex") {
  for (double a : {1.0, 1.5, 2.0}) {
    auto rf = field(a);
    KernelBasis b = compute_moments(rf->weight(), *rf, 40);
    for (int n = 1; n + 1 < b.rank; ++n) {
      CHECK(b.log_moments[n - 1] + b.log_moments[n + 1] >=
            2.0 * b.log_moments[n] - 1e-9);
    }
  }
}

TEST_CASE("alpha 1.5 normalization and first moment by independent Simpson") {
  auto rf = field(1.5);
  rf->ensure_table(80.0);
  KernelBasis b = compute_moments(rf->weight(), *rf, 4);
  auto dens = [&](double r, int pow2n) {
    const double rho = rf->rho_fast(r);
    return 2.0 * kPi * r * std::pow(r, pow2n) *
           std::exp(b.log_c_phi - 2.0 * std::pow(r, 1.5)) / (rho * rho);
  };
  const double mass = simpson([&](double r) { return dens(r, 0); }, 60.0, 60000);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  const double c1 = simpson([&](double r) { return dens(r, 2); }, 60.0, 60000);
  CHECK(std::log(c1) == doctest::Approx(b.log_moments[1]).epsilon(1e-6));
}

TEST_CASE("alpha 2 kernel equals exp(2 z conj(zeta)) on the window") {
  TruncatedKernel k = build_kernel_for_window(Weight::power(2.0), field(2.0),
                                              3.0, 1e-12);
  Rng rng(11, 0);
  for (int i = 0; i < 50; ++i) {
    const cplx z = std::polar(2.5 * rng.uniform(), 2.0 * kPi * rng.uniform());
    const cplx zeta =
        std::polar(2.5 * rng.uniform(), 2.0 * kPi * rng.uniform());
    const cplx expect = std::exp(2.0 * z * std::conj(zeta));
    const cplx got = k.eval(z, zeta);
    CHECK(std::abs(got - expect) <= 1e-8 * std::abs(expect) + 1e-12);
  }
  CHECK(k.log_diag(2.0) == doctest::Approx(8.0).epsilon(1e-10));
}

TEST_CASE("banded evaluation matches a naive term sum") {
  auto rf = field(1.5);
  TruncatedKernel k = build_kernel_with_rank(Weight::power(1.5), rf, 48, 4.0);
  const KernelBasis& b = k.basis();
  Rng rng(23, 1);
  for (int i = 0; i < 30; ++i) {
    const cplx z = std::polar(3.0 * rng.uniform(), 2.0 * kPi * rng.uniform());
    const cplx zeta =
        std::polar(3.0 * rng.uniform(), 2.0 * kPi * rng.uniform());
    cplx naive = 0.0;
    for (int n = 0; n < b.rank; ++n)
      naive += std::pow(z * std::conj(zeta), n) * std::exp(-b.log_moments[n]);
    CHECK(std::abs(k.eval(z, zeta) - naive) <=
          1e-9 * std::abs(naive) + 1e-12);
  }
}

TEST_CASE("flat intensity 2/pi at alpha 2") {
  auto rf = field(2.0);
  TruncatedKernel k = build_kernel_for_window(Weight::power(2.0), rf, 4.0,
                                              1e-10);
  for (double r : {0.0, 1.0, 2.5}) {
    const double rho = rf->rho_radial(r);
    const double intensity = std::exp(k.log_diag(r) + k.basis().log_c_phi -
                                      2.0 * r * r) /
                             (rho * rho);
    CHECK(intensity == doctest::Approx(2.0 / kPi).epsilon(1e-7));
  }
}

TEST_CASE("Cauchy-Schwarz holds in log form across the window") {
  TruncatedKernel k = build_kernel_with_rank(Weight::power(1.2), field(1.2),
                                             96, 30.0);
  Rng rng(7, 2);
  for (int i = 0; i < 400; ++i) {
    const cplx z = std::polar(28.0 * rng.uniform(), 2.0 * kPi * rng.uniform());
    const cplx w = std::polar(28.0 * rng.uniform(), 2.0 * kPi * rng.uniform());
    const double lhs = 2.0 * k.eval_log(z, w).log_abs;
    const double rhs = k.log_diag(std::abs(z)) + k.log_diag(std::abs(w));
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("diagonal comparability bracket is tight at alpha 2") {
  TruncatedKernel k = build_kernel_for_window(Weight::power(2.0), field(2.0),
                                              5.0, 1e-10);
  std::vector<cplx> probes;
  for (int i = 0; i < 64; ++i)
    probes.push_back(std::polar(4.0 * i / 64.0, 2.399963 * i));
  const auto [lo, hi] = kernel_diag_check(k, probes);
  // K(z,z) e^{-2|z|^2} = 1 identically for the full kernel.
  CHECK(lo == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("truncation rank grows with the window and bounds the tail") {
  auto rf = field(1.5);
  const Weight w = Weight::power(1.5);
  const int n4 = truncation_rank_for_window(w, *rf, 4.0, 1e-8);
  const int n8 = truncation_rank_for_window(w, *rf, 8.0, 1e-8);
  CHECK(n4 > 0);
  CHECK(n8 > n4);
  TruncatedKernel k = build_kernel_for_window(w, rf, 4.0, 1e-8);
  CHECK(k.rank() >= n4);
  CHECK(k.diag_error_bound() <= 1e-8);
}

TEST_CASE("window guard rejects points outside the validity disk") {
  TruncatedKernel k = build_kernel_with_rank(Weight::power(2.0), field(2.0),
                                             16, 2.0);
  CHECK_NOTHROW(k.check_window(cplx(1.9, 0.0)));
  CHECK_THROWS_AS(k.check_window(cplx(2.5, 0.1)), Error);
}

TEST_CASE("metric_dK is a pseudometric consistent with the alpha 2 form") {
  auto rf = field(2.0);
  TruncatedKernel k = build_kernel_for_window(Weight::power(2.0), rf, 3.0,
                                              1e-12);
  CHECK(metric_dK(k, cplx(0.5, 0.2), cplx(0.5, 0.2)) ==
        doctest::Approx(0.0).epsilon(1e-9));
  Rng rng(9, 4);
  for (int i = 0; i < 100; ++i) {
    const cplx z = std::polar(2.0 * rng.uniform(), 2.0 * kPi * rng.uniform());
    const cplx w = std::polar(2.0 * rng.uniform(), 2.0 * kPi * rng.uniform());
    const double d = metric_dK(k, z, w);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(d == doctest::Approx(metric_dK(k, w, z)).epsilon(1e-10));
    // |K(z,w)|² = e^{4 Re z conj w} gives dK = sqrt(1 - e^{-2|z-w|²}).
    const double expect =
        std::sqrt(-std::expm1(-2.0 * std::norm(z - w)));
    CHECK(d == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("dB proxy reduces to scaled Euclidean distance for constant rho") {
  RadiusField rf(Weight::power(2.0));
  const double scale = 2.0 * std::sqrt(kPi);  // 1/rho
  CHECK(metric_dB_proxy(rf, cplx(0.0, 0.0), cplx(1.0, 0.0)) ==
        doctest::Approx(scale).epsilon(1e-5));
  CHECK(metric_dB_proxy(rf, cplx(1.0, 2.0), cplx(-2.0, -2.0)) ==
        doctest::Approx(5.0 * scale).epsilon(1e-5));
  CHECK(metric_dB_proxy(rf, cplx(3.0, 1.0), cplx(3.0, 1.0)) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("basis export/import round trip preserves the moments") {
  auto rf = field(1.5);
  KernelBasis b = compute_moments(rf->weight(), *rf, 32);
  const std::string path = "/tmp/fockdpp_basis_roundtrip.csv";
  export_basis(b, path);
  KernelBasis back = import_basis(path, rf->weight());
  REQUIRE(back.rank == b.rank);
  CHECK(back.log_c_phi == doctest::Approx(b.log_c_phi).epsilon(1e-14));
  for (int n = 0; n < b.rank; ++n)
    CHECK(back.log_moments[n] ==
          doctest::Approx(b.log_moments[n]).epsilon(1e-14));
  CHECK_THROWS_AS(import_basis("/tmp/missing_basis.csv", rf->weight()), Error);
}

TEST_CASE("moment computation is deterministic") {
  auto rf1 = field(1.5);
  auto rf2 = field(1.5);
  KernelBasis a = compute_moments(rf1->weight(), *rf1, 20);
  KernelBasis b = compute_moments(rf2->weight(), *rf2, 20);
  for (int n = 0; n < 20; ++n) CHECK(a.log_moments[n] == b.log_moments[n]);
  CHECK(a.log_c_phi == b.log_c_phi);
}
