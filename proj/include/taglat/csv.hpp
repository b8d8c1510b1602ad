#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "taglat/epochs.hpp"
#include "taglat/errors.hpp"
#include "taglat/trace.hpp"

namespace taglat {

// CSV formats. Both are UTF-8 with LF line endings and '.' decimal separator;
// sampling rates travel out-of-band (CLI flags).
//
//   trace:  header "sample,tag,photo", one row per sample, 0-based sample index
//   epochs: header "epoch,sample,value", long format, one row per (epoch, sample)

// Shortest round-trip decimal form, locale-independent.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline double parse_double_field(std::string_view field, const std::string& source,
                                 std::size_t row) {
  double value = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw DataFormatError(source + ":" + std::to_string(row) + ": bad numeric field '" +
                          std::string(field) + "'");
  }
  return value;
}

inline std::size_t parse_index_field(std::string_view field, const std::string& source,
                                     std::size_t row) {
  std::size_t value = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw DataFormatError(source + ":" + std::to_string(row) + ": bad integer field '" +
                          std::string(field) + "'");
  }
  return value;
}

// Strips a trailing '\r' so files written on other platforms still load.
inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const TraceRecording& rec) {
  os << "sample,tag,photo\n";
  for (std::size_t i = 0; i < rec.tag.size(); ++i) {
    os << i << ',' << format_double(rec.tag[i]) << ',' << format_double(rec.photo[i])
       << '\n';
  }
}

// Reads a trace; sample_rate_hz is left for the caller to fill in.
inline TraceRecording read_trace_csv(std::istream& is, const std::string& source) {
  TraceRecording rec;
  std::string line;
  std::size_t row = 0;

  if (!std::getline(is, line)) {
    throw DataFormatError(source + ":1: empty file, expected header 'sample,tag,photo'");
  }
  ++row;
  if (detail::strip_cr(line) != "sample,tag,photo") {
    throw DataFormatError(source + ":1: expected header 'sample,tag,photo'");
  }

  while (std::getline(is, line)) {
    ++row;
    const std::string_view body = detail::strip_cr(line);
    if (body.empty()) continue;
    const auto fields = detail::split_fields(body);
    if (fields.size() != 3) {
      throw DataFormatError(source + ":" + std::to_string(row) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
    }
    const std::size_t sample = detail::parse_index_field(fields[0], source, row);
    if (sample != rec.tag.size()) {
      throw DataFormatError(source + ":" + std::to_string(row) +
                            ": sample indices must be consecutive from 0");
    }
    rec.tag.push_back(detail::parse_double_field(fields[1], source, row));
    rec.photo.push_back(detail::parse_double_field(fields[2], source, row));
  }
  return rec;
}

inline void write_epochs_csv(std::ostream& os, const EpochSet& set) {
  os << "epoch,sample,value\n";
  for (std::size_t e = 0; e < set.epochs.size(); ++e) {
    const auto& epoch = set.epochs[e];
    for (std::size_t k = 0; k < epoch.size(); ++k) {
      os << e << ',' << k << ',' << format_double(epoch[k]) << '\n';
    }
  }
}

// Reads a long-format epoch table; rows must be grouped by epoch with
// consecutive indices so the matrix is provably rectangular.
// sample_rate_hz / t0_ms are left for the caller.
inline EpochSet read_epochs_csv(std::istream& is, const std::string& source) {
  EpochSet set;
  std::string line;
  std::size_t row = 0;

  if (!std::getline(is, line)) {
    throw DataFormatError(source + ":1: empty file, expected header 'epoch,sample,value'");
  }
  ++row;
  if (detail::strip_cr(line) != "epoch,sample,value") {
    throw DataFormatError(source + ":1: expected header 'epoch,sample,value'");
  }

  while (std::getline(is, line)) {
    ++row;
    const std::string_view body = detail::strip_cr(line);
    if (body.empty()) continue;
    const auto fields = detail::split_fields(body);
    if (fields.size() != 3) {
      throw DataFormatError(source + ":" + std::to_string(row) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
    }
    const std::size_t epoch = detail::parse_index_field(fields[0], source, row);
    const std::size_t sample = detail::parse_index_field(fields[1], source, row);
    const double value = detail::parse_double_field(fields[2], source, row);

    if (epoch == set.epochs.size()) {
      set.epochs.emplace_back();
    } else if (epoch + 1 != set.epochs.size()) {
      throw DataFormatError(source + ":" + std::to_string(row) +
                            ": epoch indices must be grouped and consecutive from 0");
    }
    if (sample != set.epochs.back().size()) {
      throw DataFormatError(source + ":" + std::to_string(row) +
                            ": sample indices must be consecutive from 0 within an epoch");
    }
    set.epochs.back().push_back(value);
  }

  if (set.epochs.empty()) {
    throw DataFormatError(source + ": no epochs found");
  }
  const std::size_t n_samples = set.epochs.front().size();
  for (std::size_t e = 0; e < set.epochs.size(); ++e) {
    if (set.epochs[e].size() != n_samples) {
      throw DataFormatError(source + ": epoch " + std::to_string(e) + " has " +
                            std::to_string(set.epochs[e].size()) + " samples, expected " +
                            std::to_string(n_samples));
    }
  }
  return set;
}

}  // namespace taglat
