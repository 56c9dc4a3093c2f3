#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bifurc {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InstanceTooLargeError : public Error {
 public:
  InstanceTooLargeError(std::size_t n, std::size_t ceiling)
      : Error("instance has " + std::to_string(n) + " spins, oracle ceiling is " +
              std::to_string(ceiling)),
        n_(n),
        ceiling_(ceiling) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t ceiling() const noexcept { return ceiling_; }

 private:
  std::size_t n_;
  std::size_t ceiling_;
};

class EncodingRangeError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalDivergenceError : public Error {
 public:
  explicit NumericalDivergenceError(std::uint64_t step)
      : Error("non-finite oscillator state at step " + std::to_string(step)), step_(step) {}

  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class EmptyDataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace bifurc
