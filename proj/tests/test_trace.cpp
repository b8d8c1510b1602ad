#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "taglat/trace.hpp"

using namespace taglat;

namespace {

std::vector<double> event_grid(std::size_t n, double first_ms = 200.0, double step_ms = 500.0) {
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = first_ms + step_ms * static_cast<double>(i);
  return times;
}

}  // namespace

TEST_CASE("drift removal") {
  SUBCASE("constant signal goes to zero") {
    const std::vector<double> s(2000, 3.7);
    const std::vector<double> out = remove_drift(s, 1000.0, 500.0);
    for (double v : out) CHECK(std::abs(v) < 1e-12);
  }

  SUBCASE("linear ramp is flat in the interior") {
    std::vector<double> s(3000);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = 0.01 * static_cast<double>(i);
    const std::vector<double> out = remove_drift(s, 1000.0, 500.0);
    for (std::size_t i = 300; i < s.size() - 300; ++i) CHECK(std::abs(out[i]) < 1e-9);
  }

  SUBCASE("step edge keeps its position") {
    const std::size_t k = 1500;
    std::vector<double> s(3000, 0.0);
    for (std::size_t i = k; i < s.size(); ++i) s[i] = 1.0;
    const std::vector<double> out = remove_drift(s, 1000.0, 500.0);
    const std::size_t argmax =
        static_cast<std::size_t>(std::max_element(out.begin(), out.end()) - out.begin());
    CHECK(argmax >= k - 1);
    CHECK(argmax <= k + 1);
  }

  SUBCASE("commutes with amplitude scaling") {
    std::vector<double> s(1200);
    RandomStream rng(3, 0);
    for (double& v : s) v = rng.next_normal(0.0, 1.0);
    const std::vector<double> base = remove_drift(s, 1000.0, 250.0);
    std::vector<double> scaled = s;
    for (double& v : scaled) v *= 4.0;
    const std::vector<double> out = remove_drift(scaled, 1000.0, 250.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(out[i] == doctest::Approx(4.0 * base[i]).epsilon(1e-12));
    }
  }

  SUBCASE("window must fit the recording") {
    const std::vector<double> s(100, 0.0);
    CHECK_THROWS_AS(remove_drift(s, 1000.0, 500.0), std::invalid_argument);
    CHECK_THROWS_AS(remove_drift(s, 1000.0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("onset detection") {
  SUBCASE("clean unit step") {
    std::vector<double> s(3000, 0.0);
    for (std::size_t i = 1000; i < s.size(); ++i) s[i] = 1.0;
    const auto onsets = detect_onsets(s, 0.5, 100.0, 1000.0);
    REQUIRE(onsets.size() == 1);
    CHECK(onsets[0] == 1000);
  }

  SUBCASE("flat signal yields nothing") {
    const std::vector<double> s(3000, 0.0);
    CHECK(detect_onsets(s, 0.5, 100.0, 1000.0).empty());
  }

  SUBCASE("two separated pulses") {
    std::vector<double> s(3000, 0.0);
    for (std::size_t i = 1000; i < 1050; ++i) s[i] = 1.0;
    for (std::size_t i = 2000; i < 2050; ++i) s[i] = 1.0;
    const auto onsets = detect_onsets(s, 0.5, 500.0, 1000.0);
    // Exhaustive-scan oracle: every rising crossing of the mid-range level.
    std::vector<std::size_t> expected;
    const double level = 0.5;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i] >= level && s[i - 1] < level) expected.push_back(i);
    }
    CHECK(onsets == expected);
    REQUIRE(onsets.size() == 2);
    CHECK(onsets[0] == 1000);
    CHECK(onsets[1] == 2000);
  }

  SUBCASE("minimum separation keeps the first crossing only") {
    std::vector<double> s(3000, 0.0);
    for (std::size_t i = 1000; i < 1050; ++i) s[i] = 1.0;
    for (std::size_t i = 1200; i < 1250; ++i) s[i] = 1.0;
    const auto onsets = detect_onsets(s, 0.5, 500.0, 1000.0);
    REQUIRE(onsets.size() == 1);
    CHECK(onsets[0] == 1000);
  }

  SUBCASE("output is invariant under positive affine transforms") {
    std::vector<double> s(4000, 0.0);
    RandomStream rng(9, 0);
    for (double& v : s) v = rng.next_normal(0.0, 0.05);
    for (std::size_t i = 800; i < 830; ++i) s[i] += 1.0;
    for (std::size_t i = 2400; i < 2430; ++i) s[i] += 1.0;
    const auto base = detect_onsets(s, 0.5, 100.0, 1000.0);
    REQUIRE(base.size() == 2);

    std::vector<double> gained = s;
    for (double& v : gained) v *= 2.0;
    CHECK(detect_onsets(gained, 0.5, 100.0, 1000.0) == base);

    std::vector<double> shifted = s;
    for (double& v : shifted) v = 0.25 * v - 3.0;
    CHECK(detect_onsets(shifted, 0.5, 100.0, 1000.0) == base);
  }

  SUBCASE("hysteresis rejects noise re-crossings") {
    // Pulse that dips just below the level mid-way: one onset with hysteresis,
    // two without.
    std::vector<double> s(2000, 0.0);
    for (std::size_t i = 500; i < 700; ++i) s[i] = 1.0;
    s[600] = 0.48;  // brief dip below the 0.5 level but above the 0.4 reset
    CHECK(detect_onsets(s, 0.5, 10.0, 1000.0, 0.1).size() == 1);
    CHECK(detect_onsets(s, 0.5, 10.0, 1000.0, 0.0).size() == 2);
  }

  SUBCASE("parameter validation") {
    const std::vector<double> s(100, 0.0);
    CHECK_THROWS_AS(detect_onsets(s, 0.0, 10.0, 1000.0), std::invalid_argument);
    CHECK_THROWS_AS(detect_onsets(s, 1.0, 10.0, 1000.0), std::invalid_argument);
    CHECK_THROWS_AS(detect_onsets(s, 0.5, 10.0, 1000.0, 0.6), std::invalid_argument);
  }
}

TEST_CASE("event pairing") {
  SUBCASE("single pair") {
    const std::vector<std::size_t> tags{100}, photos{138};
    const EventPairing p = pair_events(tags, photos, 200.0, 1000.0);
    REQUIRE(p.pairs.size() == 1);
    CHECK(p.pairs[0] == std::pair<std::size_t, std::size_t>{100, 138});
    CHECK(p.unpaired_tags.empty());
    CHECK(p.unpaired_photos.empty());
  }

  SUBCASE("count mismatch reports the unpaired tag") {
    const std::vector<std::size_t> tags{100, 300}, photos{138};
    const EventPairing p = pair_events(tags, photos, 200.0, 1000.0);
    CHECK(p.pairs.size() == 1);
    REQUIRE(p.unpaired_tags.size() == 1);
    CHECK(p.unpaired_tags[0] == 300);
  }

  SUBCASE("window exclusion leaves both sides unpaired") {
    const std::vector<std::size_t> tags{100}, photos{350};
    const EventPairing p = pair_events(tags, photos, 200.0, 1000.0);
    CHECK(p.pairs.empty());
    CHECK(p.unpaired_tags == std::vector<std::size_t>{100});
    CHECK(p.unpaired_photos == std::vector<std::size_t>{350});
  }

  SUBCASE("pairs never cross and latencies stay in (0, max]") {
    RandomStream rng(31, 0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::size_t> tags, photos;
      std::size_t t = 0;
      for (int i = 0; i < 20; ++i) {
        t += 50 + rng.next_below(400);
        tags.push_back(t);
        if (rng.next_unit() < 0.8) photos.push_back(t + 1 + rng.next_below(250));
      }
      std::sort(photos.begin(), photos.end());
      photos.erase(std::unique(photos.begin(), photos.end()), photos.end());
      const EventPairing p = pair_events(tags, photos, 200.0, 1000.0);
      for (std::size_t i = 0; i < p.pairs.size(); ++i) {
        const double lat = static_cast<double>(p.pairs[i].second - p.pairs[i].first);
        CHECK(lat > 0.0);
        CHECK(lat <= 200.0);
        if (i > 0) {
          CHECK(p.pairs[i].first > p.pairs[i - 1].first);
          CHECK(p.pairs[i].second > p.pairs[i - 1].second);
        }
      }
      CHECK(p.pairs.size() + p.unpaired_tags.size() == tags.size());
      CHECK(p.pairs.size() + p.unpaired_photos.size() == photos.size());
    }
  }

  SUBCASE("onsets must be strictly increasing") {
    const std::vector<std::size_t> bad{100, 100};
    const std::vector<std::size_t> ok{200};
    CHECK_THROWS_AS(pair_events(bad, ok, 200.0, 1000.0), std::invalid_argument);
  }
}

TEST_CASE("latency estimation") {
  SUBCASE("constant spacing") {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < 10; ++k) pairs.emplace_back(1000 * k, 1000 * k + 38);
    const LatencyEstimate est = estimate_latency(pairs, 1000.0);
    CHECK(est.n_events == 10);
    CHECK(est.mean_ms == doctest::Approx(38.0));
    CHECK(est.sd_ms == 0.0);
  }

  SUBCASE("zero pairs is an analysis error") {
    const std::vector<std::pair<std::size_t, std::size_t>> none;
    CHECK_THROWS_AS(estimate_latency(none, 1000.0), AnalysisError);
  }
}

TEST_CASE("two-means split flags bimodal latencies") {
  SUBCASE("two distinct screen locations") {
    std::vector<double> values;
    RandomStream rng(55, 0);
    for (int i = 0; i < 50; ++i) values.push_back(rng.next_normal(117.0, 1.0));
    for (int i = 0; i < 50; ++i) values.push_back(rng.next_normal(143.0, 1.0));
    const BimodalitySplit split = split_two_means(values, 20.0);
    CHECK(split.bimodal);
    CHECK(split.lower_mean_ms == doctest::Approx(117.0).epsilon(0.01));
    CHECK(split.upper_mean_ms == doctest::Approx(143.0).epsilon(0.01));
    CHECK(split.n_lower == 50);
    CHECK(split.n_upper == 50);
  }

  SUBCASE("a unimodal sample stays unflagged") {
    std::vector<double> values;
    RandomStream rng(56, 0);
    for (int i = 0; i < 100; ++i) values.push_back(rng.next_normal(38.0, 5.3));
    CHECK_FALSE(split_two_means(values, 20.0).bimodal);
  }
}

TEST_CASE("trace synthesis") {
  SUBCASE("noiseless trace has exact sample offsets") {
    SynthSpec spec;
    spec.event_times_ms = event_grid(5);
    spec.latency_mean_ms = 38.0;
    spec.latency_sd_ms = 0.0;
    const TraceRecording rec = synthesize_trace(spec);
    const auto tag_onsets = detect_onsets(rec.tag, 0.5, 50.0, 1000.0);
    const auto photo_onsets = detect_onsets(rec.photo, 0.5, 50.0, 1000.0);
    REQUIRE(tag_onsets.size() == 5);
    REQUIRE(photo_onsets.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(photo_onsets[i] - tag_onsets[i] == 38);
    }
  }

  SUBCASE("zero events give silent channels") {
    SynthSpec spec;
    const TraceRecording rec = synthesize_trace(spec);
    CHECK(std::all_of(rec.tag.begin(), rec.tag.end(), [](double v) { return v == 0.0; }));
    CHECK(std::all_of(rec.photo.begin(), rec.photo.end(), [](double v) { return v == 0.0; }));
  }

  SUBCASE("overlapping pulses are rejected") {
    SynthSpec spec;
    spec.event_times_ms = {100.0, 105.0};
    CHECK_THROWS_AS(synthesize_trace(spec), std::invalid_argument);
  }

  SUBCASE("fixed seed reproduces the trace") {
    SynthSpec spec;
    spec.event_times_ms = event_grid(10);
    spec.latency_mean_ms = 38.0;
    spec.latency_sd_ms = 5.3;
    spec.noise_sd = 0.05;
    spec.drift_amplitude = 0.2;
    spec.seed = 7;
    const TraceRecording a = synthesize_trace(spec);
    const TraceRecording b = synthesize_trace(spec);
    CHECK(a.photo == b.photo);
    CHECK(a.tag == b.tag);
  }
}

TEST_CASE("closed-loop latency recovery") {
  AnalyzeParams params;
  params.sample_rate_hz = 1000.0;
  params.max_latency_ms = 250.0;

  auto run_loop = [&](double mean, double sd, std::uint64_t seed) {
    SynthSpec spec;
    spec.event_times_ms = event_grid(100);
    spec.latency_mean_ms = mean;
    spec.latency_sd_ms = sd;
    spec.noise_sd = 0.05;
    spec.drift_amplitude = 0.2;
    spec.seed = seed;
    const TraceRecording rec = synthesize_trace(spec);
    return analyze_trace(rec, params);
  };

  SUBCASE("recovers the injected statistics") {
    const AnalysisReport report = run_loop(38.0, 5.3, 11);
    CHECK(report.estimate.n_events == 100);
    // Tolerance: twice the standard error plus one sample of quantization.
    const double mean_tol = 2.0 * 5.3 / std::sqrt(100.0) + 1.0;
    CHECK(std::abs(report.estimate.mean_ms - 38.0) < mean_tol);
    CHECK(std::abs(report.estimate.sd_ms - 5.3) < 0.25 * 5.3);
    CHECK(report.pairing.unpaired_tags.empty());
    CHECK(report.pairing.unpaired_photos.empty());
    CHECK_FALSE(report.bimodality.bimodal);
  }

  SUBCASE("works at the longer latency too") {
    const AnalysisReport report = run_loop(117.0, 5.8, 13);
    CHECK(std::abs(report.estimate.mean_ms - 117.0) < 2.0 * 5.8 / std::sqrt(100.0) + 1.0);
    CHECK(std::abs(report.estimate.sd_ms - 5.8) < 0.25 * 5.8);
  }

  SUBCASE("a two-location mixture triggers the bimodality warning") {
    SynthSpec spec;
    spec.event_times_ms = event_grid(100);
    spec.noise_sd = 0.05;
    spec.drift_amplitude = 0.2;
    spec.seed = 17;
    std::vector<double> latencies(100);
    RandomStream rng(18, 0);
    for (std::size_t i = 0; i < latencies.size(); ++i) {
      latencies[i] = rng.next_normal(i % 2 == 0 ? 117.0 : 143.0, 2.0);
    }
    const TraceRecording rec = synthesize_trace(spec, latencies);
    const AnalysisReport report = analyze_trace(rec, params);
    CHECK(report.bimodality.bimodal);
    CHECK(report.bimodality.separation_ms > 20.0);
  }

  SUBCASE("no events is an analysis error") {
    TraceRecording rec;
    rec.sample_rate_hz = 1000.0;
    rec.tag.assign(2000, 0.0);
    rec.photo.assign(2000, 0.0);
    CHECK_THROWS_AS(analyze_trace(rec, params), AnalysisError);
  }
}
