#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>

#include "taglat/display.hpp"
#include "taglat/errors.hpp"
#include "taglat/montecarlo.hpp"
#include "taglat/pipeline.hpp"

namespace taglat {

// Flat `key = value` run configuration, `#` comments, UTF-8. Keys are grouped
// by dotted section prefix (screen., matrix., pipeline., mc.) and carry their
// unit as a suffix (_ms, _hz, _px). All parse and validation errors point at
// the offending line.

class KeyValueConfig {
 public:
  static KeyValueConfig parse_stream(std::istream& is, const std::string& source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::string_view body = trim(strip_comment(line));
      if (body.empty()) continue;
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(source + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      }
      const std::string key(trim(body.substr(0, eq)));
      const std::string value(trim(body.substr(eq + 1)));
      if (key.empty()) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
      }
      if (value.empty()) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": empty value for '" +
                          key + "'");
      }
      if (entries_contains(cfg, key)) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                          "' (first set on line " + std::to_string(cfg.entries_.at(key).line) +
                          ")");
      }
      cfg.entries_[key] = {value, lineno};
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
      throw ConfigError("cannot open config file '" + path + "'");
    }
    return parse_stream(is, path);
  }

  const std::string& source() const { return source_; }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  bool has_section(const std::string& prefix) const {
    const std::string dotted = prefix + ".";
    for (const auto& [key, entry] : entries_) {
      if (key.rfind(dotted, 0) == 0) return true;
    }
    return false;
  }

  std::string get_string(const std::string& key) const {
    return entry(key).value;
  }

  double get_double(const std::string& key) const {
    const Entry& e = entry(key);
    double value = 0.0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(value)) {
      throw ConfigError(where(key) + ": '" + e.value + "' is not a finite number");
    }
    return value;
  }

  long get_int(const std::string& key) const {
    const Entry& e = entry(key);
    long value = 0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigError(where(key) + ": '" + e.value + "' is not an integer");
    }
    return value;
  }

  std::uint64_t get_u64(const std::string& key) const {
    const Entry& e = entry(key);
    std::uint64_t value = 0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end) {
      throw ConfigError(where(key) + ": '" + e.value + "' is not an unsigned integer");
    }
    return value;
  }

  bool get_bool(const std::string& key) const {
    const std::string v = lower(entry(key).value);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError(where(key) + ": expected a boolean, got '" + entry(key).value + "'");
  }

  // "file:line: key 'x'" prefix for validation messages.
  std::string where(const std::string& key) const {
    const Entry& e = entry(key);
    return source_ + ":" + std::to_string(e.line) + ": key '" + key + "'";
  }

  // Rejects keys that are not in the known set, pointing at their lines.
  void require_known_keys(const std::set<std::string>& known) const {
    for (const auto& [key, entry] : entries_) {
      if (!known.count(key)) {
        throw ConfigError(source_ + ":" + std::to_string(entry.line) + ": unknown key '" +
                          key + "'");
      }
    }
  }

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static bool entries_contains(const KeyValueConfig& cfg, const std::string& key) {
    return cfg.entries_.count(key) != 0;
  }

  const Entry& entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
      throw ConfigError(source_ + ": missing required key '" + key + "'");
    }
    return it->second;
  }

  static std::string_view strip_comment(std::string_view line) {
    const std::size_t hash = line.find('#');
    return hash == std::string_view::npos ? line : line.substr(0, hash);
  }

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  }

  std::map<std::string, Entry> entries_;
  std::string source_;
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "screen.refresh_rate_hz", "screen.scan_time_a_ms", "screen.pixel_response_b_ms",
      "screen.width_px", "screen.height_px", "screen.orientation",
      "screen.paper_default_scan",
      "matrix.rows", "matrix.cols", "matrix.row_pitch_px", "matrix.col_pitch_px",
      "matrix.top_margin_px", "matrix.left_margin_px",
      "pipeline.tag_order", "pipeline.dispatch", "pipeline.e_mean_ms",
      "pipeline.e_jitter_sd_ms", "pipeline.fps_hz", "pipeline.vsync",
      "pipeline.n_cameras", "pipeline.single_pass", "pipeline.render_time_ms",
      "mc.n_stimuli", "mc.n_trials", "mc.photodiode_i", "mc.photodiode_j",
      "mc.sampler", "mc.seed",
  };
  return keys;
}

inline ScreenModel load_screen(const KeyValueConfig& cfg) {
  const double rr = cfg.get_double("screen.refresh_rate_hz");
  double scan_a = 0.0;
  if (cfg.has("screen.scan_time_a_ms")) {
    scan_a = cfg.get_double("screen.scan_time_a_ms");
  } else if (cfg.has("screen.paper_default_scan") && cfg.get_bool("screen.paper_default_scan")) {
    if (!(rr > 0.0)) {
      throw ConfigError(cfg.where("screen.refresh_rate_hz") + ": must be > 0");
    }
    // Whole-millisecond floor of the refresh period: 16 ms at 60 Hz.
    scan_a = std::floor(1000.0 / rr);
  } else {
    throw ConfigError(cfg.source() +
                      ": screen.scan_time_a_ms is required (or set "
                      "screen.paper_default_scan = true)");
  }

  Orientation orientation = Orientation::Normal;
  if (cfg.has("screen.orientation")) {
    const std::string v = cfg.get_string("screen.orientation");
    if (v == "normal") {
      orientation = Orientation::Normal;
    } else if (v == "turned_90") {
      orientation = Orientation::Turned90;
    } else {
      throw ConfigError(cfg.where("screen.orientation") +
                        ": expected 'normal' or 'turned_90', got '" + v + "'");
    }
  }

  try {
    return ScreenModel(rr, scan_a, cfg.get_double("screen.pixel_response_b_ms"),
                       static_cast<int>(cfg.get_int("screen.width_px")),
                       static_cast<int>(cfg.get_int("screen.height_px")), orientation);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(cfg.source() + ": " + err.what());
  }
}

inline StimulusMatrix load_matrix(const KeyValueConfig& cfg, const ScreenModel& screen) {
  try {
    const StimulusMatrix matrix(
        static_cast<int>(cfg.get_int("matrix.rows")),
        static_cast<int>(cfg.get_int("matrix.cols")),
        cfg.get_double("matrix.row_pitch_px"), cfg.get_double("matrix.col_pitch_px"),
        cfg.get_double("matrix.top_margin_px"), cfg.get_double("matrix.left_margin_px"));
    matrix.require_fits_on(screen);
    return matrix;
  } catch (const std::invalid_argument& err) {
    throw ConfigError(cfg.source() + ": " + err.what());
  }
}

inline PipelineConfig load_pipeline(const KeyValueConfig& cfg) {
  PipelineConfig pipeline;

  const std::string order = cfg.get_string("pipeline.tag_order");
  if (order == "after_render") {
    pipeline.tag_order = TagOrder::AfterRender;
  } else if (order == "before_render") {
    pipeline.tag_order = TagOrder::BeforeRender;
  } else {
    throw ConfigError(cfg.where("pipeline.tag_order") +
                      ": expected 'after_render' or 'before_render', got '" + order + "'");
  }

  if (cfg.has("pipeline.dispatch")) {
    const std::string dispatch = cfg.get_string("pipeline.dispatch");
    if (dispatch == "synchronous") {
      pipeline.dispatch = TagDispatch::Synchronous;
    } else if (dispatch == "asynchronous") {
      pipeline.dispatch = TagDispatch::Asynchronous;
    } else {
      throw ConfigError(cfg.where("pipeline.dispatch") +
                        ": expected 'synchronous' or 'asynchronous', got '" + dispatch + "'");
    }
  }

  if (cfg.has("pipeline.e_mean_ms")) pipeline.residual_mean_ms = cfg.get_double("pipeline.e_mean_ms");
  if (cfg.has("pipeline.e_jitter_sd_ms")) {
    pipeline.residual_jitter_sd_ms = cfg.get_double("pipeline.e_jitter_sd_ms");
  }
  if (cfg.has("pipeline.fps_hz")) pipeline.render.fps = cfg.get_double("pipeline.fps_hz");
  if (cfg.has("pipeline.vsync")) pipeline.render.vsync = cfg.get_bool("pipeline.vsync");
  if (cfg.has("pipeline.n_cameras")) {
    pipeline.render.n_cameras = static_cast<int>(cfg.get_int("pipeline.n_cameras"));
  }
  if (cfg.has("pipeline.single_pass")) {
    pipeline.render.single_pass = cfg.get_bool("pipeline.single_pass");
  }
  if (cfg.has("pipeline.render_time_ms")) {
    pipeline.render.render_time_ms = cfg.get_double("pipeline.render_time_ms");
  }

  try {
    validate(pipeline);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(cfg.source() + ": " + err.what());
  }
  return pipeline;
}

inline McConfig load_mc(const KeyValueConfig& cfg, const StimulusMatrix& matrix,
                        const ScreenModel& screen) {
  McConfig mc{matrix, screen};
  if (cfg.has("mc.n_stimuli")) mc.n_stimuli = static_cast<std::size_t>(cfg.get_u64("mc.n_stimuli"));
  if (cfg.has("mc.n_trials")) mc.n_trials = static_cast<std::size_t>(cfg.get_u64("mc.n_trials"));
  if (cfg.has("mc.photodiode_i")) mc.photodiode.row = cfg.get_double("mc.photodiode_i");
  if (cfg.has("mc.photodiode_j")) mc.photodiode.col = cfg.get_double("mc.photodiode_j");
  if (cfg.has("mc.sampler")) {
    const std::string v = cfg.get_string("mc.sampler");
    if (v == "with_replacement") {
      mc.sampler = Sampler::WithReplacement;
    } else if (v == "without_replacement") {
      mc.sampler = Sampler::WithoutReplacement;
    } else {
      throw ConfigError(cfg.where("mc.sampler") +
                        ": expected 'with_replacement' or 'without_replacement', got '" + v +
                        "'");
    }
  }
  if (cfg.has("mc.seed")) mc.seed = cfg.get_u64("mc.seed");

  try {
    detail::validate(mc);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(cfg.source() + ": " + err.what());
  } catch (const std::out_of_range& err) {
    throw ConfigError(cfg.source() + ": " + err.what());
  }
  return mc;
}

}  // namespace taglat
