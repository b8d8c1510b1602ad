#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "taglat/display.hpp"

namespace taglat {

// End-to-end tag-to-photodiode latency composition: frame scheduling on top
// of the raster model, the two tagging orders, first-appearance selection for
// multi-camera rendering, and a jitter budget.

struct RenderConfig {
  double fps = 60.0;           // software frame rate
  bool vsync = true;           // texture display waits for the next refresh boundary
  int n_cameras = 1;
  bool single_pass = false;    // all cameras drawn within one frame
  double render_time_ms = 0.0; // software-render duration, assumed constant
};

inline void validate(const RenderConfig& render) {
  if (!(render.fps > 0.0)) throw std::invalid_argument("RenderConfig: fps must be > 0");
  if (render.n_cameras < 1) throw std::invalid_argument("RenderConfig: n_cameras must be >= 1");
  if (!(render.render_time_ms >= 0.0)) {
    throw std::invalid_argument("RenderConfig: render_time_ms must be >= 0");
  }
}

// Whether the tag command fires after or before the software render of the
// stimulus texture.
enum class TagOrder { AfterRender, BeforeRender };

enum class TagDispatch { Synchronous, Asynchronous };

struct PipelineConfig {
  TagOrder tag_order = TagOrder::AfterRender;
  TagDispatch dispatch = TagDispatch::Synchronous;
  double residual_mean_ms = 0.0;      // hardly measurable driver/acquisition delays
  double residual_jitter_sd_ms = 0.0; // their trial-to-trial spread, for simulation
  RenderConfig render;
};

inline void validate(const PipelineConfig& pipeline) {
  validate(pipeline.render);
  if (!std::isfinite(pipeline.residual_mean_ms) || pipeline.residual_mean_ms < 0.0) {
    throw std::invalid_argument("PipelineConfig: residual_mean_ms must be finite and >= 0");
  }
  if (!std::isfinite(pipeline.residual_jitter_sd_ms) || pipeline.residual_jitter_sd_ms < 0.0) {
    throw std::invalid_argument("PipelineConfig: residual_jitter_sd_ms must be finite and >= 0");
  }
}

// Warning tags attached to latency breakdowns.
inline constexpr const char* kFlagFpsBelowRefresh = "fps-below-rr";
inline constexpr const char* kFlagTearingRisk = "tearing-risk";
inline constexpr const char* kFlagMultipass = "multipass";

struct LatencyBreakdown {
  double render_ms = 0.0;   // software render (zero when tagging after render)
  double display_ms = 0.0;  // frame scheduling + raster scan + pixel response
  double residual_ms = 0.0;
  double total_ms = 0.0;    // render_ms + display_ms + residual_ms
  std::vector<std::string> flags;
};

// Latency from texture completion to the stimulus being visible at scan
// fraction h. texture_ready_offset_ms is the completion time relative to the
// most recent refresh boundary; it is reduced modulo the refresh period.
//
// With vsync the texture waits for the next boundary and then rides the scan.
// Without vsync the texture is swapped in mid-refresh: if the raster has not
// yet passed the stimulus line it appears in the current refresh, otherwise
// it waits for that line to come around again.
inline double perceived_scan_latency_ms(const ScreenModel& screen, const RenderConfig& render,
                                        double h, double texture_ready_offset_ms) {
  if (!(h >= 0.0 && h <= 1.0)) {
    throw std::out_of_range("perceived_scan_latency_ms: h must be in [0, 1]");
  }
  if (!(texture_ready_offset_ms >= 0.0) || !std::isfinite(texture_ready_offset_ms)) {
    throw std::invalid_argument(
        "perceived_scan_latency_ms: texture_ready_offset_ms must be finite and >= 0");
  }
  const double period = screen.refresh_period_ms();
  const double offset = std::fmod(texture_ready_offset_ms, period);

  if (render.vsync) {
    const double wait = offset == 0.0 ? 0.0 : period - offset;
    return wait + screen.scan_latency_ms(h);
  }

  const double line_time = screen.scan_time_a_ms * h;
  if (offset <= line_time) {
    // Raster has not reached the stimulus line yet; it shows this refresh.
    return (line_time - offset) + screen.pixel_response_b_ms;
  }
  // Line already scanned; wait for it in the next refresh.
  return (period - offset) + line_time + screen.pixel_response_b_ms;
}

// Deterministic latency breakdown for a stimulus cell. The texture-ready
// phase is unknowable ahead of time, so deterministic evaluation assumes
// boundary alignment (offset 0); phase effects belong to the jitter budget.
// Tagging before the render adds the render duration in front.
inline LatencyBreakdown pipeline_latency(const PipelineConfig& pipeline,
                                         const ScreenModel& screen,
                                         const StimulusMatrix& matrix, GridIndex idx) {
  validate(pipeline);
  const double h = scan_height(position(matrix, screen, idx), screen);

  LatencyBreakdown out;
  if (pipeline.tag_order == TagOrder::BeforeRender) {
    out.render_ms = pipeline.render.render_time_ms;
  }
  out.display_ms = perceived_scan_latency_ms(screen, pipeline.render, h, 0.0);
  out.residual_ms = pipeline.residual_mean_ms;
  out.total_ms = out.render_ms + out.display_ms + out.residual_ms;

  if (pipeline.render.fps < screen.refresh_rate_hz) {
    out.flags.push_back(kFlagFpsBelowRefresh);
  }
  if (!pipeline.render.vsync && pipeline.render.fps > screen.refresh_rate_hz) {
    out.flags.push_back(kFlagTearingRisk);
  }
  if (pipeline.render.n_cameras > 1 && !pipeline.render.single_pass) {
    out.flags.push_back(kFlagMultipass);
  }
  return out;
}

struct LofapSelection {
  double selected_ms = 0.0;  // earliest appearance; this one elicits the response
  double spread_ms = 0.0;    // max - min across cameras
  bool multipass_detected = false;
};

// First-appearance selection across per-camera latencies: the earliest
// appearance drives the evoked response, so its latency is the one to use.
// A spread above the threshold indicates the cameras landed on different
// refreshes (multi-pass rendering).
inline LofapSelection lofap_select(std::span<const double> camera_latencies_ms,
                                   double multipass_threshold_ms) {
  if (camera_latencies_ms.empty()) {
    throw std::invalid_argument("lofap_select: empty camera latency sequence");
  }
  for (double v : camera_latencies_ms) {
    if (!(v >= 0.0)) throw std::invalid_argument("lofap_select: latencies must be >= 0");
  }
  const auto [min_it, max_it] =
      std::minmax_element(camera_latencies_ms.begin(), camera_latencies_ms.end());
  LofapSelection sel;
  sel.selected_ms = *min_it;
  sel.spread_ms = *max_it - *min_it;
  sel.multipass_detected = sel.spread_ms > multipass_threshold_ms;
  return sel;
}

// Default multipass threshold: the full-screen scan time.
inline LofapSelection lofap_select(std::span<const double> camera_latencies_ms,
                                   const ScreenModel& screen) {
  return lofap_select(camera_latencies_ms, screen.scan_time_a_ms);
}

// Per-camera latency totals for one stimulus cell. With single-pass rendering
// (or a single camera) every camera shares the frame, so all latencies are
// equal. Otherwise camera k's texture completes k frame periods after camera
// 0's boundary-aligned one.
inline std::vector<double> per_camera_latencies_ms(const PipelineConfig& pipeline,
                                                   const ScreenModel& screen,
                                                   const StimulusMatrix& matrix,
                                                   GridIndex idx) {
  validate(pipeline);
  const LatencyBreakdown base = pipeline_latency(pipeline, screen, matrix, idx);
  std::vector<double> out(static_cast<std::size_t>(pipeline.render.n_cameras),
                          base.total_ms);
  if (pipeline.render.single_pass || pipeline.render.n_cameras == 1) {
    return out;
  }
  const double h = scan_height(position(matrix, screen, idx), screen);
  const double frame_period = 1000.0 / pipeline.render.fps;
  for (int cam = 1; cam < pipeline.render.n_cameras; ++cam) {
    const double ready_after_tag = base.render_ms + cam * frame_period;
    out[static_cast<std::size_t>(cam)] =
        ready_after_tag +
        perceived_scan_latency_ms(screen, pipeline.render, h, cam * frame_period) +
        pipeline.residual_mean_ms;
  }
  return out;
}

// Standard-deviation estimate of the tag-to-appearance latency, as the
// root-sum-square of the active jitter sources:
//   - the residual-delay spread,
//   - the refresh-phase term (uniform over one refresh period, period/sqrt(12))
//     unless the tag time is phase-locked to the refresh,
//   - a dispatch term for synchronous tagging issued before the render (the
//     tag command blocks behind rendering, uniform over one frame period);
//     asynchronous dispatch removes it.
inline double jitter_budget_ms(const PipelineConfig& pipeline, const ScreenModel& screen,
                               bool tag_phase_locked = false) {
  validate(pipeline);
  const double inv_sqrt12 = 1.0 / std::sqrt(12.0);
  double sum_sq = pipeline.residual_jitter_sd_ms * pipeline.residual_jitter_sd_ms;
  if (!tag_phase_locked) {
    const double phase_sd = screen.refresh_period_ms() * inv_sqrt12;
    sum_sq += phase_sd * phase_sd;
  }
  if (pipeline.tag_order == TagOrder::BeforeRender &&
      pipeline.dispatch == TagDispatch::Synchronous) {
    const double dispatch_sd = (1000.0 / pipeline.render.fps) * inv_sqrt12;
    sum_sq += dispatch_sd * dispatch_sd;
  }
  return std::sqrt(sum_sq);
}

}  // namespace taglat
