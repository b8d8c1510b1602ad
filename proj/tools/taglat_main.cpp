// taglat: model, simulate, measure and correct the latency between a software
// tag command and the physical appearance of a stimulus on a raster display.
//
// Commands: model, montecarlo, analyze, correct, synthesize, report.
// Exit codes: 0 success, 2 usage/config error, 3 data-format error,
// 4 analysis failure.

#include "taglat/config.hpp"
#include "taglat/csv.hpp"
#include "taglat/display.hpp"
#include "taglat/epochs.hpp"
#include "taglat/errors.hpp"
#include "taglat/montecarlo.hpp"
#include "taglat/pipeline.hpp"
#include "taglat/report.hpp"
#include "taglat/rng.hpp"
#include "taglat/trace.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace taglat;

struct GlobalOpts {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

// Primary payload goes to --out when given (summary to stdout), otherwise to
// stdout (summary to stderr). Either way stdout stays byte-deterministic.
void emit(const GlobalOpts& opts, const std::string& payload, const std::string& summary) {
  if (!opts.out_path.empty()) {
    std::ofstream os(opts.out_path, std::ios::binary);
    if (!os) throw ConfigError("cannot open output file '" + opts.out_path + "'");
    os << payload;
    if (!os) throw ConfigError("failed writing '" + opts.out_path + "'");
    std::fputs(summary.c_str(), stdout);
  } else {
    std::fputs(payload.c_str(), stdout);
    std::fputs(summary.c_str(), stderr);
  }
}

KeyValueConfig load_config(const GlobalOpts& opts, const char* command) {
  if (opts.config_path.empty()) {
    throw ConfigError(std::string("--config is required for '") + command + "'");
  }
  KeyValueConfig cfg = KeyValueConfig::parse_file(opts.config_path);
  cfg.require_known_keys(known_config_keys());
  return cfg;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open input file '" + path + "'");
  return is;
}

// ---------------------------------------------------------------------------
// model: per-cell latency table
// ---------------------------------------------------------------------------

int cmd_model(const GlobalOpts& opts) {
  const KeyValueConfig cfg = load_config(opts, "model");
  const ScreenModel screen = load_screen(cfg);
  const StimulusMatrix matrix = load_matrix(cfg, screen);
  const PipelineConfig pipeline = load_pipeline(cfg);

  std::string csv = "i,j,h,pscr_ms,total_ms\n";
  std::vector<std::string> flags;
  for (int r = 0; r < matrix.rows; ++r) {
    for (int c = 0; c < matrix.cols; ++c) {
      const LatencyBreakdown lb = pipeline_latency(pipeline, screen, matrix, {r, c});
      const double h = scan_height(position(matrix, screen, GridIndex{r, c}), screen);
      csv += std::to_string(r) + "," + std::to_string(c) + "," + format_double(h) + "," +
             format_double(lb.display_ms) + "," + format_double(lb.total_ms) + "\n";
      flags = lb.flags;
    }
  }

  // Trailing row: the full-grid barycentre at fractional coordinates.
  const Barycentre centre{(matrix.rows - 1) / 2.0, (matrix.cols - 1) / 2.0};
  const double h_centre = scan_height(position(matrix, screen, centre), screen);
  const double display_centre = perceived_scan_latency_ms(screen, pipeline.render, h_centre, 0.0);
  const double render_part =
      pipeline.tag_order == TagOrder::BeforeRender ? pipeline.render.render_time_ms : 0.0;
  const double total_centre = render_part + display_centre + pipeline.residual_mean_ms;
  csv += format_double(centre.row) + "," + format_double(centre.col) + "," +
         format_double(h_centre) + "," + format_double(display_centre) + "," +
         format_double(total_centre) + "\n";

  std::string summary = "cells: " + std::to_string(matrix.rows * matrix.cols) +
                        " (+1 barycentre row)\n";
  if (!flags.empty()) {
    summary += "flags:";
    for (const auto& f : flags) summary += " " + f;
    summary += "\n";
  }
  emit(opts, csv, summary);
  return 0;
}

// ---------------------------------------------------------------------------
// montecarlo: barycentre distance simulation
// ---------------------------------------------------------------------------

std::string mc_row(std::size_t n, const McResult& r) {
  return std::to_string(n) + "," + format_double(r.mean_row_dist) + "," +
         format_double(r.sd_row_dist) + "," + format_double(r.mean_col_dist) + "," +
         format_double(r.sd_col_dist) + "," + format_double(r.mean_latency_ms) + "," +
         format_double(r.sd_latency_ms) + "\n";
}

std::string mc_signed_line(std::size_t n, const McResult& r) {
  return "signed n=" + std::to_string(n) + ": mean_row=" + format_double(r.mean_row_signed) +
         " sd_row=" + format_double(r.sd_row_signed) +
         " mean_col=" + format_double(r.mean_col_signed) +
         " sd_col=" + format_double(r.sd_col_signed) +
         " mean_ms=" + format_double(r.mean_latency_signed_ms) +
         " sd_ms=" + format_double(r.sd_latency_signed_ms) + "\n";
}

int cmd_montecarlo(const GlobalOpts& opts, const std::vector<std::size_t>& n_list,
                   unsigned threads, bool show_signed) {
  const KeyValueConfig cfg = load_config(opts, "montecarlo");
  const ScreenModel screen = load_screen(cfg);
  const StimulusMatrix matrix = load_matrix(cfg, screen);
  McConfig mc = load_mc(cfg, matrix, screen);
  if (opts.seed_set) mc.seed = opts.seed;

  std::string csv = "n,mean_row,sd_row,mean_col,sd_col,mean_ms,sd_ms\n";
  std::string summary;
  if (n_list.empty()) {
    const McResult res = run_mc(mc, threads);
    csv += mc_row(mc.n_stimuli, res);
    if (show_signed) summary += mc_signed_line(mc.n_stimuli, res);
  } else {
    for (const DistCurvePoint& point : dist_curve(mc, n_list, threads)) {
      csv += mc_row(point.n_stimuli, point.result);
      if (show_signed) summary += mc_signed_line(point.n_stimuli, point.result);
    }
  }
  summary += "trials: " + std::to_string(mc.n_trials) +
             "  sampler: " + (mc.sampler == Sampler::WithReplacement ? "with_replacement"
                                                                     : "without_replacement") +
             "\nrng: " + kRngAlgorithm + "  seed: " + std::to_string(mc.seed) + "\n";
  emit(opts, csv, summary);
  return 0;
}

// ---------------------------------------------------------------------------
// analyze: latency estimate from a recorded trace
// ---------------------------------------------------------------------------

int cmd_analyze(const GlobalOpts& opts, const std::string& trace_path,
                const AnalyzeParams& params) {
  std::ifstream is = open_input(trace_path);
  TraceRecording rec = read_trace_csv(is, trace_path);
  rec.sample_rate_hz = params.sample_rate_hz;

  const AnalysisReport report = analyze_trace(rec, params);

  std::string text;
  text += "trace: " + trace_path + " (" + std::to_string(rec.tag.size()) + " samples at " +
          format_double(params.sample_rate_hz) + " Hz)\n";
  text += "tag onsets: " + std::to_string(report.n_tag_onsets) +
          "  photo onsets: " + std::to_string(report.n_photo_onsets) +
          "  pairs: " + std::to_string(report.pairing.pairs.size()) + "\n";
  text += "latency_ms: mean=" + format_double(report.estimate.mean_ms) +
          " sd=" + format_double(report.estimate.sd_ms) +
          " n=" + std::to_string(report.estimate.n_events) + "\n";
  if (!report.pairing.unpaired_tags.empty()) {
    text += "warning: " + std::to_string(report.pairing.unpaired_tags.size()) +
            " unpaired tag onset(s)\n";
  }
  if (!report.pairing.unpaired_photos.empty()) {
    text += "warning: " + std::to_string(report.pairing.unpaired_photos.size()) +
            " unpaired photo onset(s)\n";
  }
  const BimodalitySplit& bim = report.bimodality;
  if (bim.bimodal) {
    text += "warning: bimodal latencies (cluster means " + format_double(bim.lower_mean_ms) +
            " / " + format_double(bim.upper_mean_ms) + " ms, separation " +
            format_double(bim.separation_ms) + " ms > " +
            format_double(params.bimodal_threshold_ms) +
            " ms); the stimulus may appear at two screen locations\n";
  } else {
    text += "bimodality: not detected\n";
  }

  if (!opts.out_path.empty()) {
    std::string csv = "event,tag_sample,photo_sample,latency_ms\n";
    for (std::size_t k = 0; k < report.pairing.pairs.size(); ++k) {
      csv += std::to_string(k) + "," + std::to_string(report.pairing.pairs[k].first) + "," +
             std::to_string(report.pairing.pairs[k].second) + "," +
             format_double(report.estimate.per_event_ms[k]) + "\n";
    }
    GlobalOpts file_only = opts;
    emit(file_only, csv, text);
  } else {
    std::fputs(text.c_str(), stdout);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// correct: shift epochs by an estimated offset
// ---------------------------------------------------------------------------

int cmd_correct(const GlobalOpts& opts, const std::string& epochs_path, double offset_ms,
                double fs) {
  std::ifstream is = open_input(epochs_path);
  EpochSet set = read_epochs_csv(is, epochs_path);
  set.sample_rate_hz = fs;
  validate(set);

  const EpochSet corrected = correct_offset(set, offset_ms);
  std::ostringstream os;
  write_epochs_csv(os, corrected);

  const std::string summary =
      "epochs: " + std::to_string(corrected.epochs.size()) + " x " +
      std::to_string(corrected.epochs.front().size()) + " samples\nshift: " +
      std::to_string(corrected.applied_shift_samples) + " samples (" +
      format_double(offset_ms) + " ms at " + format_double(fs) + " Hz)\n";
  emit(opts, os.str(), summary);
  return 0;
}

// ---------------------------------------------------------------------------
// synthesize: closed-loop test trace
// ---------------------------------------------------------------------------

struct SynthCliOpts {
  std::size_t n_events = 100;
  double first_event_ms = 200.0;
  double interval_ms = 500.0;
  double mean_ms = 38.0;
  double sd_ms = 5.3;
  double fs = 1000.0;
  double noise_sd = 0.05;
  double drift_amplitude = 0.2;
  double pulse_width_ms = 10.0;
  double bimodal_mean_ms = 0.0;  // 0 = unimodal
};

int cmd_synthesize(const GlobalOpts& opts, const SynthCliOpts& s) {
  SynthSpec spec;
  spec.event_times_ms.resize(s.n_events);
  for (std::size_t k = 0; k < s.n_events; ++k) {
    spec.event_times_ms[k] = s.first_event_ms + s.interval_ms * static_cast<double>(k);
  }
  spec.latency_mean_ms = s.mean_ms;
  spec.latency_sd_ms = s.sd_ms;
  spec.sample_rate_hz = s.fs;
  spec.noise_sd = s.noise_sd;
  spec.drift_amplitude = s.drift_amplitude;
  spec.pulse_width_ms = s.pulse_width_ms;
  spec.seed = opts.seed;

  TraceRecording rec;
  if (s.bimodal_mean_ms > 0.0) {
    // Alternate events between the two latency modes.
    RandomStream rng(spec.seed, 1);
    std::vector<double> latencies(s.n_events);
    for (std::size_t k = 0; k < s.n_events; ++k) {
      latencies[k] = rng.next_normal(k % 2 == 0 ? s.mean_ms : s.bimodal_mean_ms, s.sd_ms);
    }
    rec = synthesize_trace(spec, latencies);
  } else {
    rec = synthesize_trace(spec);
  }

  std::ostringstream os;
  write_trace_csv(os, rec);
  const std::string summary = "events: " + std::to_string(s.n_events) + "  samples: " +
                              std::to_string(rec.tag.size()) + "\nrng: " + kRngAlgorithm +
                              "  seed: " + std::to_string(spec.seed) + "\n";
  emit(opts, os.str(), summary);
  return 0;
}

// ---------------------------------------------------------------------------
// report: guideline compliance
// ---------------------------------------------------------------------------

int cmd_report(const GlobalOpts& opts) {
  const KeyValueConfig cfg = load_config(opts, "report");
  const ScreenModel screen = load_screen(cfg);
  const StimulusMatrix matrix = load_matrix(cfg, screen);
  const PipelineConfig pipeline = load_pipeline(cfg);

  std::string text;
  if (cfg.has_section("mc")) {
    const McConfig mc = load_mc(cfg, matrix, screen);
    text = compliance_report(screen, matrix, pipeline, &mc);
  } else {
    text = compliance_report(screen, matrix, pipeline);
  }
  emit(opts, text, "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "taglat: stimulus tagging latency toolkit for raster displays\n"
      "Models tag-to-appearance latency, simulates barycentre bias, analyzes\n"
      "photodiode recordings and corrects stimulus-locked epochs."};
  app.require_subcommand(1);

  GlobalOpts opts;
  app.add_option("--config", opts.config_path, "run configuration file (key = value)")
      ->type_name("PATH");
  auto* seed_opt =
      app.add_option("--seed", opts.seed, "override the simulation seed")->type_name("N");
  app.add_option("--out", opts.out_path, "write the primary output to this file")
      ->type_name("PATH");

  auto* model = app.add_subcommand("model", "per-cell latency table (CSV)");
  model->fallthrough();

  auto* montecarlo =
      app.add_subcommand("montecarlo", "barycentre-to-photodiode distance simulation (CSV)");
  montecarlo->fallthrough();
  std::vector<std::size_t> n_list;
  montecarlo->add_option("--n-list", n_list, "comma-separated subset sizes (distance curve)")
      ->delimiter(',');
  unsigned threads = 1;
  montecarlo->add_option("--threads", threads, "worker threads (0 = auto); results identical");
  bool show_signed = false;
  montecarlo->add_flag("--signed", show_signed, "also print signed distance statistics");

  auto* analyze = app.add_subcommand("analyze", "estimate latency from a trace CSV");
  analyze->fallthrough();
  std::string trace_path;
  analyze->add_option("trace", trace_path, "trace CSV (sample,tag,photo)")->required();
  AnalyzeParams params;
  analyze->add_option("--fs", params.sample_rate_hz, "sampling rate in Hz")->required();
  analyze->add_option("--threshold", params.threshold_fraction,
                      "onset threshold as a fraction of the dynamic range");
  analyze->add_option("--window-ms", params.drift_window_ms, "drift-removal window");
  analyze->add_option("--max-latency-ms", params.max_latency_ms, "pairing window");
  analyze->add_option("--min-separation-ms", params.min_separation_ms,
                      "minimum spacing between onsets on one channel");
  analyze->add_option("--hysteresis", params.hysteresis_fraction,
                      "re-arm hysteresis as a fraction of the dynamic range");
  analyze->add_option("--bimodal-threshold-ms", params.bimodal_threshold_ms,
                      "cluster separation that flags a two-location stimulus");

  auto* correct = app.add_subcommand("correct", "shift epochs by an estimated offset");
  correct->fallthrough();
  std::string epochs_path;
  double offset_ms = 0.0, correct_fs = 0.0;
  correct->add_option("epochs", epochs_path, "epoch CSV (epoch,sample,value)")->required();
  correct->add_option("--offset-ms", offset_ms, "offset to subtract")->required();
  correct->add_option("--fs", correct_fs, "sampling rate in Hz")->required();

  auto* synthesize = app.add_subcommand("synthesize", "generate a synthetic trace CSV");
  synthesize->fallthrough();
  SynthCliOpts synth;
  synthesize->add_option("--n-events", synth.n_events, "number of stimulus events");
  synthesize->add_option("--first-event-ms", synth.first_event_ms, "time of the first event");
  synthesize->add_option("--interval-ms", synth.interval_ms, "event spacing");
  synthesize->add_option("--mean-ms", synth.mean_ms, "injected latency mean");
  synthesize->add_option("--sd-ms", synth.sd_ms, "injected latency SD");
  synthesize->add_option("--fs", synth.fs, "sampling rate in Hz");
  synthesize->add_option("--noise-sd", synth.noise_sd, "photodiode white-noise SD");
  synthesize->add_option("--drift-amplitude", synth.drift_amplitude,
                         "slow sinusoidal drift amplitude");
  synthesize->add_option("--pulse-width-ms", synth.pulse_width_ms, "stimulus pulse width");
  synthesize->add_option("--bimodal-mean-ms", synth.bimodal_mean_ms,
                         "second latency mode (alternating events)");

  auto* report = app.add_subcommand("report", "guideline-compliance report");
  report->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  opts.seed_set = seed_opt->count() > 0;

  try {
    if (model->parsed()) return cmd_model(opts);
    if (montecarlo->parsed()) return cmd_montecarlo(opts, n_list, threads, show_signed);
    if (analyze->parsed()) return cmd_analyze(opts, trace_path, params);
    if (correct->parsed()) return cmd_correct(opts, epochs_path, offset_ms, correct_fs);
    if (synthesize->parsed()) return cmd_synthesize(opts, synth);
    if (report->parsed()) return cmd_report(opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DataFormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const AnalysisError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
