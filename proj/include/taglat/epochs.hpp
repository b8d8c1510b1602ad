#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "taglat/rng.hpp"

namespace taglat {

// Stimulus-locked epoch handling: offset correction by integer-sample shifts,
// trial averaging, and a simulation of how onset jitter attenuates the
// averaged response.

struct EpochSet {
  double sample_rate_hz = 0.0;
  std::vector<std::vector<double>> epochs;  // rectangular, n_epochs x n_samples
  double t0_ms = 0.0;  // nominal stimulus onset relative to epoch start
  long applied_shift_samples = 0;  // cumulative shift applied by correct_offset
};

inline void validate(const EpochSet& set) {
  if (!(set.sample_rate_hz > 0.0)) {
    throw std::invalid_argument("EpochSet: sample_rate_hz must be > 0");
  }
  if (set.epochs.empty()) {
    throw std::invalid_argument("EpochSet: need at least one epoch");
  }
  const std::size_t n_samples = set.epochs.front().size();
  if (n_samples == 0) {
    throw std::invalid_argument("EpochSet: epochs must be non-empty");
  }
  for (const auto& e : set.epochs) {
    if (e.size() != n_samples) {
      throw std::invalid_argument("EpochSet: epochs must all share one length");
    }
  }
  const double duration_ms = static_cast<double>(n_samples) / set.sample_rate_hz * 1000.0;
  if (!(set.t0_ms >= 0.0 && set.t0_ms < duration_ms)) {
    throw std::invalid_argument("EpochSet: t0_ms outside the epoch");
  }
}

// Shifts every epoch by round(offset_ms * fs / 1000) samples toward earlier
// time for positive offsets (the estimated latency is subtracted). Vacated
// samples are zero-filled; t0 stays put; the integer shift is recorded so the
// correction stays auditable.
inline EpochSet correct_offset(const EpochSet& set, double offset_ms) {
  validate(set);
  const std::size_t n_samples = set.epochs.front().size();
  const double duration_ms = static_cast<double>(n_samples) / set.sample_rate_hz * 1000.0;
  if (!(std::abs(offset_ms) < duration_ms)) {
    throw std::invalid_argument("correct_offset: offset exceeds the epoch duration");
  }
  const long shift = std::lround(offset_ms * set.sample_rate_hz / 1000.0);

  EpochSet out;
  out.sample_rate_hz = set.sample_rate_hz;
  out.t0_ms = set.t0_ms;
  out.applied_shift_samples = set.applied_shift_samples + shift;
  out.epochs.reserve(set.epochs.size());
  for (const auto& e : set.epochs) {
    std::vector<double> shifted(n_samples, 0.0);
    for (std::size_t k = 0; k < n_samples; ++k) {
      const long src = static_cast<long>(k) + shift;
      if (src >= 0 && src < static_cast<long>(n_samples)) {
        shifted[k] = e[static_cast<std::size_t>(src)];
      }
    }
    out.epochs.push_back(std::move(shifted));
  }
  return out;
}

// Sample-wise arithmetic mean across epochs.
inline std::vector<double> average(const EpochSet& set) {
  validate(set);
  const std::size_t n_samples = set.epochs.front().size();
  std::vector<double> mean(n_samples, 0.0);
  for (const auto& e : set.epochs) {
    for (std::size_t k = 0; k < n_samples; ++k) mean[k] += e[k];
  }
  const double n = static_cast<double>(set.epochs.size());
  for (double& v : mean) v /= n;
  return mean;
}

// How much onset jitter shrinks the averaged response: simulates n Gaussian
// unit pulses with onsets jittered by Normal(0, jitter_sd_ms), averages them,
// and returns peak(average) / peak(single pulse). Converges to
// pulse_sd / sqrt(pulse_sd^2 + jitter_sd^2) for large n.
inline double jitter_attenuation(double pulse_sd_ms, double jitter_sd_ms,
                                 std::size_t n_epochs, double sample_rate_hz,
                                 std::uint64_t seed) {
  if (!(pulse_sd_ms > 0.0)) {
    throw std::invalid_argument("jitter_attenuation: pulse_sd_ms must be > 0");
  }
  if (!(jitter_sd_ms >= 0.0)) {
    throw std::invalid_argument("jitter_attenuation: jitter_sd_ms must be >= 0");
  }
  if (n_epochs < 1) {
    throw std::invalid_argument("jitter_attenuation: n_epochs must be >= 1");
  }
  if (!(sample_rate_hz > 0.0)) {
    throw std::invalid_argument("jitter_attenuation: sample_rate_hz must be > 0");
  }

  // Epoch long enough for the jittered pulses to decay inside it.
  const double margin_ms = 6.0 * (pulse_sd_ms + jitter_sd_ms);
  const auto n_samples = static_cast<std::size_t>(
      std::max<long long>(3, std::llround(2.0 * margin_ms * sample_rate_hz / 1000.0)));
  const double centre_ms = margin_ms;

  RandomStream rng(seed, 0);
  std::vector<double> sum(n_samples, 0.0);
  const double inv_two_var = 1.0 / (2.0 * pulse_sd_ms * pulse_sd_ms);
  for (std::size_t e = 0; e < n_epochs; ++e) {
    const double onset = centre_ms + rng.next_normal(0.0, jitter_sd_ms);
    for (std::size_t k = 0; k < n_samples; ++k) {
      const double t_ms = static_cast<double>(k) * 1000.0 / sample_rate_hz;
      const double d = t_ms - onset;
      sum[k] += std::exp(-d * d * inv_two_var);
    }
  }

  double avg_peak = 0.0;
  for (double v : sum) avg_peak = std::max(avg_peak, v);
  avg_peak /= static_cast<double>(n_epochs);

  double single_peak = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t_ms = static_cast<double>(k) * 1000.0 / sample_rate_hz;
    const double d = t_ms - centre_ms;
    single_peak = std::max(single_peak, std::exp(-d * d * inv_two_var));
  }
  return avg_peak / single_peak;
}

}  // namespace taglat
