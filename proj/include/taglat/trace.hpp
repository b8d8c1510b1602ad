#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "taglat/errors.hpp"
#include "taglat/rng.hpp"

namespace taglat {

// Latency estimation from recorded tag and photodiode channels: drift
// removal, onset detection, event pairing, per-event statistics, plus a
// synthetic-trace generator for closed-loop testing.

struct TraceRecording {
  double sample_rate_hz = 0.0;
  std::vector<double> tag;
  std::vector<double> photo;
};

inline void validate(const TraceRecording& rec) {
  if (!(rec.sample_rate_hz > 0.0)) {
    throw std::invalid_argument("TraceRecording: sample_rate_hz must be > 0");
  }
  if (rec.tag.size() != rec.photo.size()) {
    throw std::invalid_argument("TraceRecording: channel lengths differ");
  }
  for (double v : rec.tag) {
    if (!std::isfinite(v)) throw std::invalid_argument("TraceRecording: non-finite tag sample");
  }
  for (double v : rec.photo) {
    if (!std::isfinite(v)) throw std::invalid_argument("TraceRecording: non-finite photo sample");
  }
}

// Subtracts a centered moving average (window clamped at the edges). Zero
// phase, so step edges keep their positions to within one sample.
inline std::vector<double> remove_drift(std::span<const double> signal, double sample_rate_hz,
                                        double window_ms) {
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("remove_drift: sample_rate_hz must be > 0");
  }
  if (!(window_ms > 0.0)) {
    throw std::invalid_argument("remove_drift: window_ms must be > 0");
  }
  const std::size_t n = signal.size();
  const auto window = static_cast<std::size_t>(
      std::llround(window_ms * sample_rate_hz / 1000.0));
  if (window < 1 || window > n) {
    throw std::invalid_argument("remove_drift: window does not fit the recording");
  }
  const std::size_t half = window / 2;

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + signal[i];

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(i + half, n - 1);
    const double mean = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    out[i] = signal[i] - mean;
  }
  return out;
}

// Rising crossings of a range-relative threshold,
//   level = min + threshold_fraction * (max - min),
// keeping only the first crossing in each min_separation window. Hysteresis
// re-arms detection only after the signal falls below
// level - hysteresis_fraction * (max - min). A flat signal has no dynamic
// range and yields no onsets.
inline std::vector<std::size_t> detect_onsets(std::span<const double> signal,
                                              double threshold_fraction,
                                              double min_separation_ms,
                                              double sample_rate_hz,
                                              double hysteresis_fraction = 0.1) {
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0)) {
    throw std::invalid_argument("detect_onsets: threshold_fraction must be in (0, 1)");
  }
  if (!(hysteresis_fraction >= 0.0 && hysteresis_fraction < threshold_fraction)) {
    throw std::invalid_argument(
        "detect_onsets: hysteresis_fraction must be in [0, threshold_fraction)");
  }
  if (!(min_separation_ms >= 0.0)) {
    throw std::invalid_argument("detect_onsets: min_separation_ms must be >= 0");
  }
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("detect_onsets: sample_rate_hz must be > 0");
  }
  std::vector<std::size_t> onsets;
  if (signal.empty()) return onsets;

  const auto [min_it, max_it] = std::minmax_element(signal.begin(), signal.end());
  const double lo = *min_it;
  const double range = *max_it - lo;
  if (range == 0.0) return onsets;

  const double level = lo + threshold_fraction * range;
  const double reset_level = level - hysteresis_fraction * range;
  const auto separation = static_cast<std::size_t>(
      std::llround(min_separation_ms * sample_rate_hz / 1000.0));

  bool armed = signal[0] < level;
  bool have_onset = false;
  std::size_t last_onset = 0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    if (armed) {
      if (signal[i] >= level) {
        armed = false;
        if (!have_onset || i - last_onset >= separation) {
          onsets.push_back(i);
          have_onset = true;
          last_onset = i;
        }
      }
    } else if (signal[i] < reset_level) {
      armed = true;
    }
  }
  return onsets;
}

struct EventPairing {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (tag sample, photo sample)
  std::vector<std::size_t> unpaired_tags;
  std::vector<std::size_t> unpaired_photos;
};

// Pairs each tag onset with the earliest strictly-subsequent photodiode onset
// within max_latency_ms. Pairs never cross; events that find no partner are
// reported, not dropped.
inline EventPairing pair_events(std::span<const std::size_t> tag_onsets,
                                std::span<const std::size_t> photo_onsets,
                                double max_latency_ms, double sample_rate_hz) {
  if (!(max_latency_ms > 0.0)) {
    throw std::invalid_argument("pair_events: max_latency_ms must be > 0");
  }
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("pair_events: sample_rate_hz must be > 0");
  }
  auto require_increasing = [](std::span<const std::size_t> v, const char* what) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] <= v[i - 1]) {
        throw std::invalid_argument(std::string("pair_events: ") + what +
                                    " onsets must be strictly increasing");
      }
    }
  };
  require_increasing(tag_onsets, "tag");
  require_increasing(photo_onsets, "photo");

  const double max_samples = max_latency_ms * sample_rate_hz / 1000.0;
  EventPairing out;
  std::size_t pi = 0;
  for (std::size_t tag : tag_onsets) {
    while (pi < photo_onsets.size() && photo_onsets[pi] <= tag) {
      out.unpaired_photos.push_back(photo_onsets[pi]);
      ++pi;
    }
    if (pi < photo_onsets.size() &&
        static_cast<double>(photo_onsets[pi] - tag) <= max_samples) {
      out.pairs.emplace_back(tag, photo_onsets[pi]);
      ++pi;
    } else {
      out.unpaired_tags.push_back(tag);
    }
  }
  for (; pi < photo_onsets.size(); ++pi) out.unpaired_photos.push_back(photo_onsets[pi]);
  return out;
}

struct LatencyEstimate {
  std::vector<double> per_event_ms;
  double mean_ms = 0.0;
  double sd_ms = 0.0;  // sample SD, n-1 denominator (0 for a single event)
  std::size_t n_events = 0;
};

inline LatencyEstimate estimate_latency(
    std::span<const std::pair<std::size_t, std::size_t>> pairs, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("estimate_latency: sample_rate_hz must be > 0");
  }
  if (pairs.empty()) {
    throw AnalysisError("estimate_latency: no paired events");
  }
  LatencyEstimate est;
  est.n_events = pairs.size();
  est.per_event_ms.reserve(pairs.size());
  double sum = 0.0;
  for (const auto& [tag, photo] : pairs) {
    const double ms = static_cast<double>(photo - tag) * 1000.0 / sample_rate_hz;
    est.per_event_ms.push_back(ms);
    sum += ms;
  }
  est.mean_ms = sum / static_cast<double>(est.n_events);
  if (est.n_events >= 2) {
    double sq = 0.0;
    for (double v : est.per_event_ms) {
      const double d = v - est.mean_ms;
      sq += d * d;
    }
    est.sd_ms = std::sqrt(sq / static_cast<double>(est.n_events - 1));
  }
  return est;
}

struct BimodalitySplit {
  bool bimodal = false;
  double lower_mean_ms = 0.0;
  double upper_mean_ms = 0.0;
  double separation_ms = 0.0;
  std::size_t n_lower = 0;
  std::size_t n_upper = 0;
};

// Exact 1-D two-means clustering (optimal split of the sorted values); the
// sample is flagged bimodal when the cluster means separate by more than the
// threshold. Catches a stimulus appearing at two screen locations.
inline BimodalitySplit split_two_means(std::span<const double> values_ms,
                                       double separation_threshold_ms) {
  BimodalitySplit split;
  const std::size_t n = values_ms.size();
  if (n < 2) return split;

  std::vector<double> sorted(values_ms.begin(), values_ms.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + sorted[i];
    prefix_sq[i + 1] = prefix_sq[i] + sorted[i] * sorted[i];
  }

  double best_sse = std::numeric_limits<double>::infinity();
  std::size_t best_k = 1;
  for (std::size_t k = 1; k < n; ++k) {
    const double sum_lo = prefix[k];
    const double sum_hi = prefix[n] - prefix[k];
    const double sse = prefix_sq[n] - sum_lo * sum_lo / static_cast<double>(k) -
                       sum_hi * sum_hi / static_cast<double>(n - k);
    if (sse < best_sse) {
      best_sse = sse;
      best_k = k;
    }
  }
  split.n_lower = best_k;
  split.n_upper = n - best_k;
  split.lower_mean_ms = prefix[best_k] / static_cast<double>(best_k);
  split.upper_mean_ms = (prefix[n] - prefix[best_k]) / static_cast<double>(n - best_k);
  split.separation_ms = split.upper_mean_ms - split.lower_mean_ms;
  split.bimodal = split.separation_ms > separation_threshold_ms;
  return split;
}

// Synthetic two-channel recording: clean rectangular tag pulses, photodiode
// pulses delayed per event, white noise and a slow sinusoidal drift on the
// photodiode channel only.
struct SynthSpec {
  std::vector<double> event_times_ms;
  double latency_mean_ms = 0.0;
  double latency_sd_ms = 0.0;
  double sample_rate_hz = 1000.0;
  double noise_sd = 0.0;
  double drift_amplitude = 0.0;
  std::uint64_t seed = 0;
  double pulse_width_ms = 10.0;
  double drift_period_ms = 5000.0;
  double duration_ms = 0.0;  // 0 = sized to cover every pulse
};

namespace detail {

inline void validate(const SynthSpec& spec) {
  if (!(spec.sample_rate_hz > 0.0)) {
    throw std::invalid_argument("SynthSpec: sample_rate_hz must be > 0");
  }
  if (!(spec.pulse_width_ms > 0.0)) {
    throw std::invalid_argument("SynthSpec: pulse_width_ms must be > 0");
  }
  if (!(spec.latency_sd_ms >= 0.0) || !(spec.noise_sd >= 0.0)) {
    throw std::invalid_argument("SynthSpec: spreads must be >= 0");
  }
  if (!(spec.drift_period_ms > 0.0)) {
    throw std::invalid_argument("SynthSpec: drift_period_ms must be > 0");
  }
  for (std::size_t i = 0; i < spec.event_times_ms.size(); ++i) {
    if (!(spec.event_times_ms[i] >= 0.0)) {
      throw std::invalid_argument("SynthSpec: event times must be >= 0");
    }
    if (i > 0 && spec.event_times_ms[i] - spec.event_times_ms[i - 1] <= spec.pulse_width_ms) {
      throw std::invalid_argument("SynthSpec: overlapping pulses");
    }
  }
}

// First sample at or after the given time.
inline std::size_t sample_at(double time_ms, double fs) {
  const double s = time_ms * fs / 1000.0;
  return static_cast<std::size_t>(std::max(0.0, std::ceil(s - 1e-9)));
}

inline void add_pulse(std::vector<double>& channel, double start_ms, double width_ms,
                      double fs) {
  const std::size_t s0 = sample_at(start_ms, fs);
  const std::size_t s1 = sample_at(start_ms + width_ms, fs);
  for (std::size_t i = s0; i < s1 && i < channel.size(); ++i) channel[i] = 1.0;
}

}  // namespace detail

// Explicit per-event latencies (one per event time).
inline TraceRecording synthesize_trace(const SynthSpec& spec,
                                       std::span<const double> per_event_latencies_ms) {
  detail::validate(spec);
  if (per_event_latencies_ms.size() != spec.event_times_ms.size()) {
    throw std::invalid_argument("synthesize_trace: one latency per event required");
  }

  double duration = spec.duration_ms;
  if (duration <= 0.0) {
    double last = 0.0;
    for (std::size_t i = 0; i < spec.event_times_ms.size(); ++i) {
      last = std::max(last, spec.event_times_ms[i] + std::max(0.0, per_event_latencies_ms[i]));
    }
    duration = last + spec.pulse_width_ms + 100.0;
    if (spec.event_times_ms.empty()) duration = 1000.0;
  }
  const auto n_samples = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(duration * spec.sample_rate_hz / 1000.0)));

  TraceRecording rec;
  rec.sample_rate_hz = spec.sample_rate_hz;
  rec.tag.assign(n_samples, 0.0);
  rec.photo.assign(n_samples, 0.0);

  for (std::size_t i = 0; i < spec.event_times_ms.size(); ++i) {
    detail::add_pulse(rec.tag, spec.event_times_ms[i], spec.pulse_width_ms, spec.sample_rate_hz);
    detail::add_pulse(rec.photo, spec.event_times_ms[i] + per_event_latencies_ms[i],
                      spec.pulse_width_ms, spec.sample_rate_hz);
  }

  if (spec.noise_sd > 0.0) {
    RandomStream noise(spec.seed, 2);
    for (double& v : rec.photo) v += noise.next_normal(0.0, spec.noise_sd);
  }
  if (spec.drift_amplitude != 0.0) {
    const double w = 2.0 * std::numbers::pi / spec.drift_period_ms;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double t_ms = static_cast<double>(i) * 1000.0 / spec.sample_rate_hz;
      rec.photo[i] += spec.drift_amplitude * std::sin(w * t_ms);
    }
  }
  return rec;
}

// Latencies drawn per event from Normal(latency_mean_ms, latency_sd_ms).
inline TraceRecording synthesize_trace(const SynthSpec& spec) {
  detail::validate(spec);
  RandomStream lat_rng(spec.seed, 1);
  std::vector<double> latencies(spec.event_times_ms.size());
  for (double& v : latencies) {
    v = lat_rng.next_normal(spec.latency_mean_ms, spec.latency_sd_ms);
  }
  return synthesize_trace(spec, latencies);
}

struct AnalyzeParams {
  double sample_rate_hz = 0.0;
  double threshold_fraction = 0.5;
  double hysteresis_fraction = 0.1;
  double drift_window_ms = 500.0;
  double min_separation_ms = 50.0;
  double max_latency_ms = 500.0;
  double bimodal_threshold_ms = 20.0;
};

struct AnalysisReport {
  LatencyEstimate estimate;
  EventPairing pairing;
  std::size_t n_tag_onsets = 0;
  std::size_t n_photo_onsets = 0;
  BimodalitySplit bimodality;
};

// Full measurement chain: drift-remove the photodiode channel, detect onsets
// on both channels, pair them, estimate latency statistics, check for a
// two-location (bimodal) latency pattern. Throws AnalysisError when no event
// pairs survive.
inline AnalysisReport analyze_trace(const TraceRecording& rec, const AnalyzeParams& params) {
  validate(rec);
  if (!(params.sample_rate_hz > 0.0)) {
    throw std::invalid_argument("analyze_trace: sample_rate_hz must be > 0");
  }

  const std::vector<double> photo_flat =
      remove_drift(rec.photo, params.sample_rate_hz, params.drift_window_ms);
  const std::vector<std::size_t> tag_onsets =
      detect_onsets(rec.tag, params.threshold_fraction, params.min_separation_ms,
                    params.sample_rate_hz, params.hysteresis_fraction);
  const std::vector<std::size_t> photo_onsets =
      detect_onsets(photo_flat, params.threshold_fraction, params.min_separation_ms,
                    params.sample_rate_hz, params.hysteresis_fraction);

  AnalysisReport report;
  report.n_tag_onsets = tag_onsets.size();
  report.n_photo_onsets = photo_onsets.size();
  report.pairing =
      pair_events(tag_onsets, photo_onsets, params.max_latency_ms, params.sample_rate_hz);
  if (report.pairing.pairs.empty()) {
    throw AnalysisError("analyze_trace: no tag/photodiode event pairs detected");
  }
  report.estimate = estimate_latency(report.pairing.pairs, params.sample_rate_hz);
  report.bimodality =
      split_two_means(report.estimate.per_event_ms, params.bimodal_threshold_ms);
  return report;
}

}  // namespace taglat
