#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace defectlab {

/// Base of every error raised by the library.
///
/// `is_validation()` separates problems with the caller's inputs (bad flags,
/// malformed files, unsatisfiable preconditions) from failures while doing
/// the work. The CLI maps the former to exit code 1 and the latter to 2.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, bool validation = false)
      : std::runtime_error(what), validation_(validation) {}
  bool is_validation() const noexcept { return validation_; }

 private:
  bool validation_;
};

class MiningError : public Error {
 public:
  MiningError(const std::string& what, std::string diagnostic = {})
      : Error(diagnostic.empty() ? what : what + ": " + diagnostic),
        diagnostic_(std::move(diagnostic)) {}
  const std::string& diagnostic() const noexcept { return diagnostic_; }

 private:
  std::string diagnostic_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what, true), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, true) {}
};

class LabelingError : public Error {
 public:
  LabelingError(const std::string& file, const std::string& fix, const std::string& detail)
      : Error("cannot blame " + file + " for fix " + fix + ": " + detail),
        file_(file), fix_(fix) {}
  const std::string& file() const noexcept { return file_; }
  const std::string& fix() const noexcept { return fix_; }

 private:
  std::string file_;
  std::string fix_;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

class ImportError : public Error {
 public:
  explicit ImportError(const std::string& what) : Error(what, true) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, true) {}
};

class ResampleError : public Error {
 public:
  explicit ResampleError(const std::string& what) : Error(what, true) {}
};

class SplitError : public Error {
 public:
  explicit SplitError(const std::string& what) : Error(what, true) {}
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error(what, true) {}
};

class ScoreError : public Error {
 public:
  explicit ScoreError(const std::string& what) : Error(what, true) {}
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& what) : Error(what, true) {}
};

class StatsError : public Error {
 public:
  explicit StatsError(const std::string& what) : Error(what, true) {}
};

}  // namespace defectlab
