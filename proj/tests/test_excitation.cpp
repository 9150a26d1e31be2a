#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "gfrls/excitation.hpp"
#include "native_forms.hpp"
#include "test_support.hpp"

using namespace gfrls;
using gfrls::testing::TestRng;
using gfrls::testing::max_abs_diff;

namespace {

using gfrls::testing::brute_force_excitation;

std::vector<RectMatrix> random_sequence(TestRng& rng, int len, int p, int n) {
  std::vector<RectMatrix> seq;
  seq.reserve(len);
  for (int k = 0; k < len; ++k) {
    seq.emplace_back(rng.matrix(p, n));
  }
  return seq;
}

}  // namespace

TEST_CASE("weighted_regressor") {
  SECTION("identity weighting is a no-op") {
    TestRng rng(201);
    const RectMatrix phi(rng.matrix(2, 3));
    const RectMatrix out = weighted_regressor(phi, SpdMatrix::identity(2));
    REQUIRE(max_abs_diff(out.m(), phi.m()) < 1e-14);
  }
  SECTION("scalar weighting scales by the inverse square root") {
    Matrix gamma(1, 1);
    gamma << 4.0;
    Matrix phi(1, 2);
    phi << 2.0, 0.0;
    const RectMatrix out =
        weighted_regressor(RectMatrix(phi), SpdMatrix(SymMatrix(gamma)));
    REQUIRE(out.m()(0, 0) == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(out.m()(0, 1) == Catch::Approx(0.0).margin(1e-14));
  }
  SECTION("gram identity phibar^T phibar = phi^T Gamma^{-1} phi") {
    TestRng rng(203);
    for (int trial = 0; trial < 30; ++trial) {
      const SpdMatrix gamma = rng.spd(3);
      const RectMatrix phi(rng.matrix(3, 4));
      const RectMatrix bar = weighted_regressor(phi, gamma);
      const Matrix direct =
          phi.m().transpose() * spd_inverse(gamma).m() * phi.m();
      REQUIRE(max_abs_diff(Matrix(bar.m().transpose() * bar.m()), direct) <
              1e-10);
    }
  }
}

TEST_CASE("certify_excitation") {
  SECTION("constant scalar sequence") {
    Matrix one(1, 1);
    one << 1.0;
    const std::vector<RectMatrix> seq(5, RectMatrix(one));
    const auto report = certify_excitation(seq, 1);
    REQUIRE(report.alpha_bar == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(report.beta_bar == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(report.is_pe);
    REQUIRE(report.k_start == 0);
    REQUIRE(report.k_end == 4);
  }

  SECTION("zero sequence is not exciting") {
    const std::vector<RectMatrix> seq(4, RectMatrix(Matrix::Zero(1, 2)));
    const auto report = certify_excitation(seq, 2);
    REQUIRE(report.alpha_bar == 0.0);
    REQUIRE(report.beta_bar == 0.0);
    REQUIRE_FALSE(report.is_pe);
  }

  SECTION("alternating basis rows cover the space at window 2") {
    Matrix e1(1, 2);
    e1 << 1.0, 0.0;
    Matrix e2(1, 2);
    e2 << 0.0, 1.0;
    std::vector<RectMatrix> seq;
    for (int k = 0; k < 6; ++k) {
      seq.emplace_back(k % 2 == 0 ? e1 : e2);
    }
    const auto report = certify_excitation(seq, 2);
    REQUIRE(report.alpha_bar == Catch::Approx(1.0).margin(1e-14));
    REQUIRE(report.is_pe);
    // Window 1 sums are singular.
    const auto narrow = certify_excitation(seq, 1);
    REQUIRE(narrow.alpha_bar == 0.0);
    REQUIRE_FALSE(narrow.is_pe);
  }

  SECTION("incremental path matches brute force") {
    TestRng rng(207);
    for (int trial = 0; trial < 50; ++trial) {
      const int p = rng.uniform_int(1, 2);
      const int n = rng.uniform_int(1, 3);
      const int len = rng.uniform_int(5, 40);
      const int window = rng.uniform_int(1, len);
      const auto seq = random_sequence(rng, len, p, n);
      const auto fast = certify_excitation(seq, window);
      const auto slow = brute_force_excitation(seq, window);
      REQUIRE(std::abs(fast.alpha_bar - slow.alpha_bar) <= 1e-12);
      REQUIRE(std::abs(fast.beta_bar - slow.beta_bar) <= 1e-12);
    }
  }

  SECTION("scaling the sequence scales both bounds quadratically") {
    TestRng rng(211);
    const auto seq = random_sequence(rng, 20, 1, 2);
    const double c = 3.0;
    std::vector<RectMatrix> scaled;
    for (const auto& phi : seq) {
      scaled.emplace_back(Matrix(c * phi.m()));
    }
    const auto base = certify_excitation(seq, 3);
    const auto grown = certify_excitation(scaled, 3);
    REQUIRE(grown.alpha_bar == Catch::Approx(c * c * base.alpha_bar).epsilon(1e-12));
    REQUIRE(grown.beta_bar == Catch::Approx(c * c * base.beta_bar).epsilon(1e-12));
  }

  SECTION("appending a zero regressor never helps") {
    TestRng rng(213);
    const auto seq = random_sequence(rng, 15, 1, 2);
    auto extended = seq;
    extended.emplace_back(Matrix::Zero(1, 2));
    const auto base = certify_excitation(seq, 4);
    const auto longer = certify_excitation(extended, 4);
    REQUIRE(longer.alpha_bar <= base.alpha_bar + 1e-14);
    REQUIRE(longer.beta_bar == Catch::Approx(base.beta_bar).margin(1e-14));
  }

  SECTION("window certificate dominance: alpha <= N beta") {
    TestRng rng(217);
    for (int trial = 0; trial < 20; ++trial) {
      const auto seq = random_sequence(rng, 20, 2, 2);
      const int window = rng.uniform_int(1, 5);
      const auto report = certify_excitation(seq, window);
      REQUIRE(report.alpha_bar <= window * report.beta_bar + 1e-12);
    }
  }

  SECTION("error paths") {
    REQUIRE_THROWS_AS(certify_excitation({}, 1), EmptySequence);
    std::vector<RectMatrix> seq;
    seq.emplace_back(Matrix::Zero(1, 2));
    seq.emplace_back(Matrix::Zero(1, 3));
    REQUIRE_THROWS_AS(certify_excitation(seq, 1), DimensionMismatch);
    std::vector<RectMatrix> short_seq(3, RectMatrix(Matrix::Zero(1, 2)));
    REQUIRE_THROWS_AS(certify_excitation(short_seq, 4), InvalidParameter);
    REQUIRE_THROWS_AS(certify_excitation(short_seq, 0), InvalidParameter);
  }
}

TEST_CASE("transfer_bounds") {
  SECTION("unit weighting bounds are unchanged") {
    ExcitationReport report{2, 1.5, 3.0, true, 0, 9};
    const auto out = transfer_bounds(report, 1.0, 1.0);
    REQUIRE(out.alpha_bar == report.alpha_bar);
    REQUIRE(out.beta_bar == report.beta_bar);
    REQUIRE(out.window == report.window);
  }

  SECTION("alpha shrinks by gamma_max, beta grows by gamma_min") {
    ExcitationReport report{3, 1.0, 2.0, true, 0, 9};
    const auto out = transfer_bounds(report, 0.5, 2.0);
    REQUIRE(out.alpha_bar == Catch::Approx(0.5).margin(1e-14));
    REQUIRE(out.beta_bar == Catch::Approx(4.0).margin(1e-14));
  }

  SECTION("transferred alpha never beats direct certification of the weighted sequence") {
    TestRng rng(223);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2;
      const int len = 20;
      const double gamma_min = 0.5;
      const double gamma_max = 2.0;
      const auto seq = random_sequence(rng, len, 1, n);
      std::vector<RectMatrix> weighted;
      for (const auto& phi : seq) {
        Matrix gamma(1, 1);
        gamma << rng.uniform(gamma_min, gamma_max);
        weighted.push_back(
            weighted_regressor(phi, SpdMatrix(SymMatrix(gamma))));
      }
      const int window = 4;
      const auto direct = certify_excitation(weighted, window);
      const auto transferred =
          transfer_bounds(certify_excitation(seq, window), gamma_min, gamma_max);
      REQUIRE(direct.alpha_bar >= transferred.alpha_bar - 1e-12);
      REQUIRE(direct.beta_bar <= transferred.beta_bar + 1e-12);
    }
  }

  SECTION("invalid weighting interval") {
    ExcitationReport report{1, 1.0, 1.0, true, 0, 4};
    REQUIRE_THROWS_AS(transfer_bounds(report, 0.0, 1.0), InvalidParameter);
    REQUIRE_THROWS_AS(transfer_bounds(report, 2.0, 1.0), InvalidParameter);
  }
}
