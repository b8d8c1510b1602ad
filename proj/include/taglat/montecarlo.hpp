#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "taglat/display.hpp"
#include "taglat/rng.hpp"

namespace taglat {

// Monte Carlo simulation of the barycentre of a random subset of displayed
// stimuli and its distance to the photodiode position, in stimulus units and
// in scan-axis milliseconds.
//
// Determinism contract: each trial draws from its own substream derived from
// (seed, trial index), and the reduction runs serially over trial order, so a
// fixed seed gives bit-identical results for any thread count.

enum class Sampler { WithReplacement, WithoutReplacement };

struct McConfig {
  StimulusMatrix matrix;
  ScreenModel screen;
  std::size_t n_stimuli = 1;  // stimulus presentations per trial
  std::size_t n_trials = 1;
  Barycentre photodiode;      // fractional grid position under the photodiode
  Sampler sampler = Sampler::WithReplacement;
  std::uint64_t seed = 0;
  bool keep_per_trial = false;

  McConfig(StimulusMatrix matrix, ScreenModel screen)
      : matrix(matrix), screen(screen) {}
};

struct McResult {
  // Absolute per-axis distances |barycentre - photodiode|, statistics over trials.
  double mean_row_dist = 0.0, sd_row_dist = 0.0;
  double mean_col_dist = 0.0, sd_col_dist = 0.0;
  // Scan-axis latency offset (absolute), via the scan-step conversion.
  double mean_latency_ms = 0.0, sd_latency_ms = 0.0;
  // Signed variants (barycentre minus photodiode); a symmetric sampling
  // distribution drives the signed means to zero while the absolute means
  // settle at the folded-mean floor.
  double mean_row_signed = 0.0, sd_row_signed = 0.0;
  double mean_col_signed = 0.0, sd_col_signed = 0.0;
  double mean_latency_signed_ms = 0.0, sd_latency_signed_ms = 0.0;
  std::size_t n_trials = 0;
  std::vector<std::pair<double, double>> per_trial;  // (row, col) barycentres, optional
};

namespace detail {

inline void validate(const McConfig& config) {
  config.matrix.require_fits_on(config.screen);
  if (config.n_stimuli < 1) throw std::invalid_argument("McConfig: n_stimuli must be >= 1");
  if (config.n_trials < 1) throw std::invalid_argument("McConfig: n_trials must be >= 1");
  const std::size_t cells =
      static_cast<std::size_t>(config.matrix.rows) * static_cast<std::size_t>(config.matrix.cols);
  if (config.sampler == Sampler::WithoutReplacement && config.n_stimuli > cells) {
    throw std::invalid_argument(
        "McConfig: without-replacement sampling needs n_stimuli <= rows*cols");
  }
  require_valid_barycentre(config.matrix, config.photodiode);
}

// One trial's barycentre, drawn from the trial substream.
inline std::pair<double, double> trial_barycentre(const McConfig& config, std::uint64_t trial,
                                                  std::vector<std::uint32_t>& scratch) {
  RandomStream rng(config.seed, trial);
  const std::uint64_t cells =
      static_cast<std::uint64_t>(config.matrix.rows) * static_cast<std::uint64_t>(config.matrix.cols);
  const int cols = config.matrix.cols;
  double row_sum = 0.0;
  double col_sum = 0.0;
  if (config.sampler == Sampler::WithReplacement) {
    for (std::size_t k = 0; k < config.n_stimuli; ++k) {
      const std::uint64_t cell = rng.next_below(cells);
      row_sum += static_cast<double>(cell / static_cast<std::uint64_t>(cols));
      col_sum += static_cast<double>(cell % static_cast<std::uint64_t>(cols));
    }
  } else {
    // Partial Fisher-Yates over the cell list.
    scratch.resize(cells);
    std::iota(scratch.begin(), scratch.end(), 0u);
    for (std::size_t k = 0; k < config.n_stimuli; ++k) {
      const std::uint64_t pick = k + rng.next_below(cells - k);
      std::swap(scratch[k], scratch[pick]);
      row_sum += static_cast<double>(scratch[k] / static_cast<std::uint32_t>(cols));
      col_sum += static_cast<double>(scratch[k] % static_cast<std::uint32_t>(cols));
    }
  }
  const double n = static_cast<double>(config.n_stimuli);
  return {row_sum / n, col_sum / n};
}

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
};

// Two-pass mean / sample SD (n-1 denominator). A constant sample short-circuits
// so an exhaustive draw reports exactly zero spread, free of summation rounding.
inline Stats stats_of(const std::vector<double>& values) {
  Stats s;
  const std::size_t n = values.size();
  bool constant = true;
  for (double v : values) {
    if (v != values.front()) {
      constant = false;
      break;
    }
  }
  if (constant) {
    s.mean = values.front();
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  if (n < 2) return s;
  double sq = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    sq += d * d;
  }
  s.sd = std::sqrt(sq / static_cast<double>(n - 1));
  return s;
}

}  // namespace detail

inline McResult run_mc(const McConfig& config, unsigned n_threads = 1) {
  detail::validate(config);
  const std::size_t n = config.n_trials;
  std::vector<std::pair<double, double>> bary(n);

  if (n_threads == 0) {
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  }
  n_threads = static_cast<unsigned>(
      std::min<std::size_t>(n_threads, n));

  if (n_threads <= 1) {
    std::vector<std::uint32_t> scratch;
    for (std::size_t t = 0; t < n; ++t) {
      bary[t] = detail::trial_barycentre(config, t, scratch);
    }
  } else {
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
      workers.emplace_back([&, w] {
        std::vector<std::uint32_t> scratch;
        for (std::size_t t = w; t < n; t += n_threads) {
          bary[t] = detail::trial_barycentre(config, t, scratch);
        }
      });
    }
    for (auto& th : workers) th.join();
  }

  // Serial reduction in trial order keeps results schedule-independent.
  const double step_ms = scan_step_ms(config.matrix, config.screen);
  const bool turned = config.screen.orientation == Orientation::Turned90;
  std::vector<double> row_dist(n), col_dist(n), lat(n);
  std::vector<double> row_signed(n), col_signed(n), lat_signed(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double dr = bary[t].first - config.photodiode.row;
    const double dc = bary[t].second - config.photodiode.col;
    row_signed[t] = dr;
    col_signed[t] = dc;
    row_dist[t] = std::abs(dr);
    col_dist[t] = std::abs(dc);
    lat_signed[t] = step_ms * (turned ? dc : dr);
    lat[t] = std::abs(lat_signed[t]);
  }

  McResult out;
  out.n_trials = n;
  auto fill = [](const std::vector<double>& v, double& mean, double& sd) {
    const detail::Stats s = detail::stats_of(v);
    mean = s.mean;
    sd = s.sd;
  };
  fill(row_dist, out.mean_row_dist, out.sd_row_dist);
  fill(col_dist, out.mean_col_dist, out.sd_col_dist);
  fill(lat, out.mean_latency_ms, out.sd_latency_ms);
  fill(row_signed, out.mean_row_signed, out.sd_row_signed);
  fill(col_signed, out.mean_col_signed, out.sd_col_signed);
  fill(lat_signed, out.mean_latency_signed_ms, out.sd_latency_signed_ms);
  if (config.keep_per_trial) out.per_trial = std::move(bary);
  return out;
}

struct DistCurvePoint {
  std::size_t n_stimuli = 0;
  McResult result;
};

// One Monte Carlo summary per requested subset size. Each size runs on a seed
// derived from (seed, n) so the points are statistically independent yet
// reproducible.
inline std::vector<DistCurvePoint> dist_curve(const McConfig& config,
                                              std::span<const std::size_t> n_values,
                                              unsigned n_threads = 1) {
  std::vector<DistCurvePoint> out;
  out.reserve(n_values.size());
  for (std::size_t n : n_values) {
    McConfig point = config;
    point.n_stimuli = n;
    point.seed = derive_stream_seed(config.seed, n);
    out.push_back({n, run_mc(point, n_threads)});
  }
  return out;
}

}  // namespace taglat
