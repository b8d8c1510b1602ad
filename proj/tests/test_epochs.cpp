#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "taglat/epochs.hpp"
#include "taglat/rng.hpp"

using namespace taglat;

namespace {

EpochSet make_set(std::vector<std::vector<double>> epochs, double fs = 1000.0) {
  EpochSet set;
  set.sample_rate_hz = fs;
  set.epochs = std::move(epochs);
  set.t0_ms = 0.0;
  return set;
}

// Gaussian bump template used for alignment checks.
std::vector<double> bump(std::size_t n, double centre, double sd) {
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = static_cast<double>(k) - centre;
    s[k] = std::exp(-d * d / (2.0 * sd * sd));
  }
  return s;
}

std::size_t argmax(const std::vector<double>& s) {
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

}  // namespace

TEST_CASE("offset correction shifts toward earlier time") {
  SUBCASE("38 ms at 1000 Hz moves content 38 samples") {
    std::vector<double> epoch(200, 0.0);
    epoch[100] = 1.0;
    const EpochSet shifted = correct_offset(make_set({epoch}), 38.0);
    CHECK(shifted.epochs[0][62] == 1.0);
    CHECK(shifted.epochs[0][100] == 0.0);
    CHECK(shifted.applied_shift_samples == 38);
  }

  SUBCASE("zero offset is the identity") {
    std::vector<double> epoch(100);
    RandomStream rng(1, 0);
    for (double& v : epoch) v = rng.next_normal();
    const EpochSet set = make_set({epoch});
    CHECK(correct_offset(set, 0.0).epochs == set.epochs);
  }

  SUBCASE("fractional offsets round to the nearest sample") {
    std::vector<double> epoch(200, 0.0);
    epoch[100] = 1.0;
    const EpochSet shifted = correct_offset(make_set({epoch}), 38.4);
    CHECK(shifted.epochs[0][62] == 1.0);
    CHECK(shifted.applied_shift_samples == 38);
  }

  SUBCASE("shift followed by its inverse restores the overlap") {
    std::vector<double> epoch(300);
    RandomStream rng(2, 0);
    for (double& v : epoch) v = rng.next_normal();
    const EpochSet set = make_set({epoch});
    const EpochSet back = correct_offset(correct_offset(set, 40.0), -40.0);
    for (std::size_t k = 40; k + 40 < epoch.size(); ++k) {
      CHECK(back.epochs[0][k] == epoch[k]);
    }
    CHECK(back.applied_shift_samples == 0);
  }

  SUBCASE("vacated samples are zero-filled") {
    std::vector<double> epoch(100, 1.0);
    const EpochSet shifted = correct_offset(make_set({epoch}), 10.0);
    for (std::size_t k = 90; k < 100; ++k) CHECK(shifted.epochs[0][k] == 0.0);
  }

  SUBCASE("offset beyond the epoch is rejected") {
    const EpochSet set = make_set({std::vector<double>(100, 0.0)});
    CHECK_THROWS_AS(correct_offset(set, 150.0), std::invalid_argument);
    CHECK_THROWS_AS(correct_offset(set, -150.0), std::invalid_argument);
  }
}

TEST_CASE("epoch averaging") {
  SUBCASE("identical epochs average to themselves") {
    std::vector<double> epoch(50);
    RandomStream rng(4, 0);
    for (double& v : epoch) v = rng.next_normal();
    const std::vector<double> avg = average(make_set({epoch, epoch, epoch}));
    for (std::size_t k = 0; k < epoch.size(); ++k) {
      CHECK(avg[k] == doctest::Approx(epoch[k]).epsilon(1e-12));
    }
  }

  SUBCASE("opposite epochs cancel") {
    std::vector<double> s(50);
    RandomStream rng(5, 0);
    for (double& v : s) v = rng.next_normal();
    std::vector<double> neg = s;
    for (double& v : neg) v = -v;
    const std::vector<double> avg = average(make_set({s, neg}));
    for (double v : avg) CHECK(std::abs(v) < 1e-12);
  }

  SUBCASE("linearity") {
    RandomStream rng(6, 0);
    std::vector<std::vector<double>> e1(4, std::vector<double>(64));
    std::vector<std::vector<double>> e2 = e1;
    for (auto& e : e1)
      for (double& v : e) v = rng.next_normal();
    for (auto& e : e2)
      for (double& v : e) v = rng.next_normal();

    std::vector<std::vector<double>> combo(4, std::vector<double>(64));
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t k = 0; k < 64; ++k) combo[i][k] = 2.0 * e1[i][k] - 0.5 * e2[i][k];

    const std::vector<double> lhs = average(make_set(combo));
    const std::vector<double> a1 = average(make_set(e1));
    const std::vector<double> a2 = average(make_set(e2));
    for (std::size_t k = 0; k < 64; ++k) {
      CHECK(lhs[k] == doctest::Approx(2.0 * a1[k] - 0.5 * a2[k]).epsilon(1e-12));
    }
  }

  SUBCASE("noise shrinks as one over sqrt(n)") {
    RandomStream rng(8, 0);
    const std::size_t n_epochs = 100, n_samples = 2000;
    std::vector<std::vector<double>> epochs(n_epochs, std::vector<double>(n_samples));
    for (auto& e : epochs)
      for (double& v : e) v = rng.next_normal();
    const std::vector<double> avg = average(make_set(epochs));
    double sq = 0.0;
    for (double v : avg) sq += v * v;
    const double rms = std::sqrt(sq / static_cast<double>(n_samples));
    CHECK(rms == doctest::Approx(1.0 / std::sqrt(100.0)).epsilon(0.20));
  }
}

TEST_CASE("constant-offset recovery realigns the average") {
  const std::size_t n = 400;
  const double delay_ms = 38.0;
  const std::vector<double> tpl = bump(n, 150.0, 12.0);
  std::vector<double> delayed(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const long src = static_cast<long>(k) - 38;
    if (src >= 0) delayed[k] = tpl[static_cast<std::size_t>(src)];
  }
  const EpochSet corrected = correct_offset(make_set({delayed, delayed, delayed}), delay_ms);
  const std::vector<double> avg = average(corrected);
  const long peak_diff =
      static_cast<long>(argmax(avg)) - static_cast<long>(argmax(tpl));
  CHECK(std::abs(peak_diff) <= 1);
}

TEST_CASE("jitter attenuation of the averaged pulse") {
  SUBCASE("no jitter, no attenuation") {
    CHECK(jitter_attenuation(20.0, 0.0, 100, 1000.0, 1) == doctest::Approx(1.0));
  }

  SUBCASE("equal pulse and jitter widths attenuate by 1/sqrt(2)") {
    const double factor = jitter_attenuation(20.0, 20.0, 10000, 1000.0, 2);
    CHECK(factor == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02 / 0.707));
    // Analytic Gaussian-convolution value.
    CHECK(std::abs(factor - 0.7071) < 0.02);
  }

  SUBCASE("dominant jitter crushes the average") {
    const double factor = jitter_attenuation(10.0, 100.0, 10000, 1000.0, 3);
    const double analytic = 10.0 / std::sqrt(10.0 * 10.0 + 100.0 * 100.0);
    CHECK(analytic == doctest::Approx(0.0995).epsilon(1e-3));
    CHECK(factor < 0.15);
  }

  SUBCASE("non-increasing in the jitter width") {
    double prev = 2.0;
    for (const double jitter : {0.0, 5.0, 10.0, 20.0, 40.0}) {
      const double f = jitter_attenuation(20.0, jitter, 4000, 1000.0, 4);
      CHECK(f <= prev + 0.02);
      prev = f;
    }
  }

  SUBCASE("deterministic per seed") {
    CHECK(jitter_attenuation(20.0, 20.0, 500, 1000.0, 9) ==
          jitter_attenuation(20.0, 20.0, 500, 1000.0, 9));
  }
}
