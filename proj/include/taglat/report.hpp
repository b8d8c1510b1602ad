#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "taglat/display.hpp"
#include "taglat/montecarlo.hpp"
#include "taglat/pipeline.hpp"

namespace taglat {

// Guideline-compliance report: mechanical checks of a run configuration
// against the timing-uncertainty rules of thumb, plus informational items
// that cannot be checked from a config file.

struct UncertaintyBounds {
  // Worst case when scan time and pixel response do not overlap: 2 * (a + b)
  // per compared condition pair.
  double sum_bound_ms = 0.0;
  // Round per-refresh envelope: 20 ms at 60 Hz, scaled with the refresh rate.
  double envelope_per_refresh_ms = 0.0;
  double envelope_bound_ms = 0.0;
};

inline UncertaintyBounds uncertainty_bounds(const ScreenModel& screen) {
  UncertaintyBounds b;
  b.sum_bound_ms = 2.0 * (screen.scan_time_a_ms + screen.pixel_response_b_ms);
  b.envelope_per_refresh_ms = 1200.0 / screen.refresh_rate_hz;
  b.envelope_bound_ms = 2.0 * b.envelope_per_refresh_ms;
  return b;
}

namespace detail {

inline std::string fmt_ms(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

// Deterministic plain-text report; no timestamps.
inline std::string compliance_report(const ScreenModel& screen, const StimulusMatrix& matrix,
                                     const PipelineConfig& pipeline,
                                     const McConfig* mc = nullptr) {
  validate(pipeline);
  matrix.require_fits_on(screen);

  std::string out;
  auto line = [&out](const std::string& s) {
    out += s;
    out += '\n';
  };

  line("latency uncertainty report");
  line("==========================");
  line("screen: " + detail::fmt_ms(screen.refresh_rate_hz) + " Hz refresh (" +
       detail::fmt_ms(screen.refresh_period_ms()) + " ms period), scan " +
       detail::fmt_ms(screen.scan_time_a_ms) + " ms, pixel response " +
       detail::fmt_ms(screen.pixel_response_b_ms) + " ms, " +
       std::to_string(screen.width_px) + "x" + std::to_string(screen.height_px) + " px, " +
       (screen.orientation == Orientation::Turned90 ? "turned_90" : "normal") +
       " orientation");
  line("matrix: " + std::to_string(matrix.rows) + "x" + std::to_string(matrix.cols) +
       ", pitch " + detail::fmt_ms(matrix.row_pitch_px) + "/" +
       detail::fmt_ms(matrix.col_pitch_px) + " px, margins " +
       detail::fmt_ms(matrix.top_margin_px) + "/" + detail::fmt_ms(matrix.left_margin_px) +
       " px");
  line("");

  const UncertaintyBounds bounds = uncertainty_bounds(screen);
  line("[bound] cumulative uncertainty when comparing two averaged conditions:");
  line("  2 x (scan + pixel response) = 2 x " +
       detail::fmt_ms(screen.scan_time_a_ms + screen.pixel_response_b_ms) + " ms = " +
       detail::fmt_ms(bounds.sum_bound_ms) + " ms");
  line("  2 x per-refresh envelope    = 2 x " + detail::fmt_ms(bounds.envelope_per_refresh_ms) +
       " ms = " + detail::fmt_ms(bounds.envelope_bound_ms) + " ms");
  line("  note: whether the pixel response overlaps the scan is display-dependent;");
  line("  the gap between the two bounds reflects that ambiguity.");
  line("");

  const double spread = max_latency_spread_ms(matrix, screen);
  const bool at_limit = spread >= 0.9 * screen.scan_time_a_ms;
  line(std::string("[check] max latency spread across the matrix = ") + detail::fmt_ms(spread) +
       " ms vs scan time " + detail::fmt_ms(screen.scan_time_a_ms) + " ms -- " +
       (at_limit ? "AT-LIMIT (stimuli span nearly the whole scan)" : "ok"));

  // Guideline 1: tag order and dispatch.
  std::string g1;
  if (pipeline.tag_order == TagOrder::AfterRender &&
      pipeline.dispatch == TagDispatch::Synchronous) {
    g1 = "ok (tag after render, synchronous dispatch)";
  } else if (pipeline.tag_order == TagOrder::BeforeRender &&
             pipeline.dispatch == TagDispatch::Asynchronous) {
    g1 = "ok (tag before render works with asynchronous dispatch)";
  } else if (pipeline.tag_order == TagOrder::BeforeRender) {
    g1 = "WARN: synchronous tag before render blocks behind rendering; "
         "prefer tagging after render or asynchronous dispatch";
  } else {
    g1 = "ok (tag after render; asynchronous dispatch adds no render blocking)";
  }
  line("[guideline 1] tag order/dispatch: " + g1);

  // Guideline 2: refresh rate.
  line("[guideline 2] refresh rate: " + detail::fmt_ms(screen.refresh_rate_hz) +
       " Hz; higher refresh rates shrink every scan-related term");

  // Guideline 3: vsync.
  line(std::string("[guideline 3] vsync: ") +
       (pipeline.render.vsync ? "on (texture display locked to refresh boundaries)"
                              : "WARN: off -- tearing possible, appearance time depends on "
                                "swap phase"));

  // Guideline 4: cameras / single pass.
  if (pipeline.render.n_cameras <= 1) {
    line("[guideline 4] cameras: single camera, nothing to align");
  } else if (pipeline.render.single_pass) {
    line("[guideline 4] cameras: " + std::to_string(pipeline.render.n_cameras) +
         " cameras rendered single-pass; per-camera latencies are equal");
  } else {
    line("[guideline 4] cameras: WARN: " + std::to_string(pipeline.render.n_cameras) +
         " cameras without single-pass rendering; enable single-pass or correct with the "
         "first-appearance latency");
  }

  // Guideline 5: barycentre predictability.
  const Barycentre grid_centre{(matrix.rows - 1) / 2.0, (matrix.cols - 1) / 2.0};
  line("[guideline 5] full-grid barycentre: (" + detail::fmt_ms(grid_centre.row) + ", " +
       detail::fmt_ms(grid_centre.col) + ")");
  if (mc != nullptr) {
    const double offset = screen.orientation == Orientation::Turned90
                              ? std::abs(grid_centre.col - mc->photodiode.col)
                              : std::abs(grid_centre.row - mc->photodiode.row);
    const double offset_ms = scan_step_ms(matrix, screen) * offset;
    line("  photodiode at (" + detail::fmt_ms(mc->photodiode.row) + ", " +
         detail::fmt_ms(mc->photodiode.col) + "): scan-axis offset from grid centre = " +
         detail::fmt_ms(offset_ms) + " ms");
  }

  line("");
  const double budget = jitter_budget_ms(pipeline, screen);
  line("jitter budget (tag not phase-locked to refresh): " + detail::fmt_ms(budget) +
       " ms SD");
  line("");
  line("[info] keep the photodiode at one location across conditions, close to the");
  line("       barycentre of the displayed stimuli.");
  line("[info] assess every subject under all conditions and use a substantial sample;");
  line("       exclude subjects with trained vision (pilots, competitive gamers).");
  return out;
}

}  // namespace taglat
