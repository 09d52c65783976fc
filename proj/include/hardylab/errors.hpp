#pragma once

#include <stdexcept>
#include <string>

namespace hardylab {

/// Caller violated a documented precondition (bad grid, parameter out of range, ...).
class precondition_error : public std::invalid_argument {
 public:
  explicit precondition_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed external input (tabulated potential files, config files).
class parse_error : public precondition_error {
 public:
  explicit parse_error(const std::string& what) : precondition_error(what) {}
};

/// An algorithm failed to deliver its postcondition; never silently ignored.
class internal_error : public std::runtime_error {
 public:
  explicit internal_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hardylab
