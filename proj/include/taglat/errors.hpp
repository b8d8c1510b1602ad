#pragma once

#include <stdexcept>
#include <string>

namespace taglat {

// Error taxonomy used across the library and mapped to CLI exit codes:
//
//   std::invalid_argument / std::out_of_range  -> exit 2 (bad parameters, geometry,
//                                                  indices, empty inputs)
//   ConfigError                                -> exit 2 (config file problems,
//                                                  messages carry file:line)
//   DataFormatError                            -> exit 3 (malformed CSV, messages
//                                                  carry file:row)
//   AnalysisError                              -> exit 4 (analysis cannot proceed,
//                                                  e.g. zero detected events)

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace taglat
