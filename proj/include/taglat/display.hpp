#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>

namespace taglat {

// Raster-timing and stimulus-grid geometry. Everything here is a pure
// function over immutable values; times are real-valued milliseconds with no
// quantization to refresh ticks (frame scheduling lives in pipeline.hpp).

// Scan direction relative to the displayed image. Turned90 covers displays
// physically rotated a quarter turn (smartphone held sideways), where the
// raster progresses along the displayed width instead of the height.
enum class Orientation { Normal, Turned90 };

struct ScreenModel {
  double refresh_rate_hz;
  double scan_time_a_ms;       // top-of-scan to bottom-of-scan duration
  double pixel_response_b_ms;  // pixel colour-switch time
  int width_px;
  int height_px;
  Orientation orientation;

  ScreenModel(double refresh_rate_hz, double scan_time_a_ms, double pixel_response_b_ms,
              int width_px, int height_px, Orientation orientation = Orientation::Normal)
      : refresh_rate_hz(refresh_rate_hz),
        scan_time_a_ms(scan_time_a_ms),
        pixel_response_b_ms(pixel_response_b_ms),
        width_px(width_px),
        height_px(height_px),
        orientation(orientation) {
    if (!(refresh_rate_hz > 0.0)) {
      throw std::invalid_argument("ScreenModel: refresh_rate_hz must be > 0");
    }
    if (!(scan_time_a_ms > 0.0)) {
      throw std::invalid_argument("ScreenModel: scan_time_a_ms must be > 0");
    }
    if (!(pixel_response_b_ms >= 0.0)) {
      throw std::invalid_argument("ScreenModel: pixel_response_b_ms must be >= 0");
    }
    if (width_px <= 0 || height_px <= 0) {
      throw std::invalid_argument("ScreenModel: resolution must be positive");
    }
    // The scan has to fit inside one refresh period.
    if (scan_time_a_ms > 1000.0 / refresh_rate_hz + 1e-9) {
      throw std::invalid_argument(
          "ScreenModel: scan_time_a_ms exceeds the refresh period (" +
          std::to_string(1000.0 / refresh_rate_hz) + " ms)");
    }
  }

  double refresh_period_ms() const { return 1000.0 / refresh_rate_hz; }

  // Pixel extent along the scan direction.
  int scan_extent_px() const {
    return orientation == Orientation::Turned90 ? width_px : height_px;
  }

  // Time from start-of-scan until a stimulus at scan fraction h has fully
  // switched colour: scan_time * h + pixel_response.
  double scan_latency_ms(double h) const {
    if (!(h >= 0.0 && h <= 1.0)) {
      throw std::out_of_range("scan_latency_ms: h must be in [0, 1]");
    }
    return scan_time_a_ms * h + pixel_response_b_ms;
  }
};

// Rectangular grid of stimulus centres. Margins run from the screen edge to
// the first centre; pitches are centre-to-centre.
struct StimulusMatrix {
  int rows;
  int cols;
  double row_pitch_px;   // vertical spacing between adjacent rows
  double col_pitch_px;   // horizontal spacing between adjacent columns
  double top_margin_px;  // to the first row of centres
  double left_margin_px; // to the first column of centres

  StimulusMatrix(int rows, int cols, double row_pitch_px, double col_pitch_px,
                 double top_margin_px, double left_margin_px)
      : rows(rows),
        cols(cols),
        row_pitch_px(row_pitch_px),
        col_pitch_px(col_pitch_px),
        top_margin_px(top_margin_px),
        left_margin_px(left_margin_px) {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("StimulusMatrix: rows and cols must be >= 1");
    }
    if (!(row_pitch_px > 0.0) || !(col_pitch_px > 0.0)) {
      throw std::invalid_argument("StimulusMatrix: pitches must be > 0");
    }
    if (!(top_margin_px >= 0.0) || !(left_margin_px >= 0.0)) {
      throw std::invalid_argument("StimulusMatrix: margins must be >= 0");
    }
  }

  bool fits_on(const ScreenModel& screen) const {
    const double row_extent = top_margin_px + (rows - 1) * row_pitch_px;
    const double col_extent = left_margin_px + (cols - 1) * col_pitch_px;
    return row_extent < screen.height_px && col_extent < screen.width_px;
  }

  void require_fits_on(const ScreenModel& screen) const {
    if (!fits_on(screen)) {
      throw std::invalid_argument("StimulusMatrix: grid does not fit on the screen");
    }
  }
};

// Zero-based (row, col) cell position.
struct GridIndex {
  int row = 0;
  int col = 0;
};

// Fractional grid coordinates; the mean position of a set of displayed cells.
struct Barycentre {
  double row = 0.0;
  double col = 0.0;
};

// Stimulus centre as fractions of the screen width (x) and height (y).
struct FracPosition {
  double x = 0.0;
  double y = 0.0;
};

inline void require_valid_index(const StimulusMatrix& matrix, GridIndex idx) {
  if (idx.row < 0 || idx.row >= matrix.rows || idx.col < 0 || idx.col >= matrix.cols) {
    throw std::out_of_range("GridIndex (" + std::to_string(idx.row) + ", " +
                            std::to_string(idx.col) + ") outside " +
                            std::to_string(matrix.rows) + "x" + std::to_string(matrix.cols) +
                            " grid");
  }
}

inline void require_valid_barycentre(const StimulusMatrix& matrix, Barycentre b) {
  if (!(b.row >= 0.0 && b.row <= matrix.rows - 1) ||
      !(b.col >= 0.0 && b.col <= matrix.cols - 1)) {
    throw std::out_of_range("Barycentre outside grid bounds");
  }
}

inline FracPosition position(const StimulusMatrix& matrix, const ScreenModel& screen,
                             GridIndex idx) {
  require_valid_index(matrix, idx);
  matrix.require_fits_on(screen);
  return {(matrix.left_margin_px + idx.col * matrix.col_pitch_px) / screen.width_px,
          (matrix.top_margin_px + idx.row * matrix.row_pitch_px) / screen.height_px};
}

// Fractional grid coordinates (e.g. a barycentre) use the same pitch/margin map.
inline FracPosition position(const StimulusMatrix& matrix, const ScreenModel& screen,
                             Barycentre b) {
  require_valid_barycentre(matrix, b);
  matrix.require_fits_on(screen);
  return {(matrix.left_margin_px + b.col * matrix.col_pitch_px) / screen.width_px,
          (matrix.top_margin_px + b.row * matrix.row_pitch_px) / screen.height_px};
}

// Fraction of the scan extent at which the stimulus sits: the raster reaches
// it after scan_time * h. Follows the scan direction, so a turned screen
// reads the horizontal coordinate.
inline double scan_height(FracPosition pos, const ScreenModel& screen) {
  if (!(pos.x >= 0.0 && pos.x <= 1.0 && pos.y >= 0.0 && pos.y <= 1.0)) {
    throw std::out_of_range("scan_height: position fractions must be in [0, 1]");
  }
  return screen.orientation == Orientation::Turned90 ? pos.x : pos.y;
}

// Milliseconds of scan time per index step along the scan axis:
// scan_time * pitch / extent.
inline double scan_step_ms(const StimulusMatrix& matrix, const ScreenModel& screen) {
  matrix.require_fits_on(screen);
  if (screen.orientation == Orientation::Turned90) {
    return screen.scan_time_a_ms * matrix.col_pitch_px / screen.width_px;
  }
  return screen.scan_time_a_ms * matrix.row_pitch_px / screen.height_px;
}

// Latency difference between two stimuli on the same rendered frame. Only the
// scan-axis coordinate matters: rows for a normal screen, columns for a
// turned one. Valid under single-frame display of both stimuli (single-pass
// rendering, or after first-appearance selection).
inline double delta_latency_ms(const StimulusMatrix& matrix, const ScreenModel& screen,
                               GridIndex from, GridIndex to) {
  require_valid_index(matrix, from);
  require_valid_index(matrix, to);
  const int steps = screen.orientation == Orientation::Turned90
                        ? std::abs(to.col - from.col)
                        : std::abs(to.row - from.row);
  return scan_step_ms(matrix, screen) * steps;
}

inline Barycentre barycentre(std::span<const GridIndex> stimuli) {
  if (stimuli.empty()) {
    throw std::invalid_argument("barycentre: empty stimulus sequence");
  }
  double row_sum = 0.0;
  double col_sum = 0.0;
  for (const GridIndex& idx : stimuli) {
    row_sum += idx.row;
    col_sum += idx.col;
  }
  const double n = static_cast<double>(stimuli.size());
  return {row_sum / n, col_sum / n};
}

// Latency offset between a fractional grid position and a reference cell,
// along the scan axis.
inline double barycentre_offset_ms(const StimulusMatrix& matrix, const ScreenModel& screen,
                                   Barycentre bary, GridIndex ref) {
  require_valid_barycentre(matrix, bary);
  require_valid_index(matrix, ref);
  const double delta = screen.orientation == Orientation::Turned90
                           ? std::abs(bary.col - ref.col)
                           : std::abs(bary.row - ref.row);
  return scan_step_ms(matrix, screen) * delta;
}

// Worst-case latency difference across the grid: the delta between the two
// extreme positions along the scan axis. Bounded by scan_time_a_ms for any
// matrix that fits on screen.
inline double max_latency_spread_ms(const StimulusMatrix& matrix, const ScreenModel& screen) {
  const int steps = screen.orientation == Orientation::Turned90 ? matrix.cols - 1
                                                                : matrix.rows - 1;
  return scan_step_ms(matrix, screen) * steps;
}

}  // namespace taglat
