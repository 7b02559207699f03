#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterate left the domain of the map. `index` is the first k with f^k(x)
// outside the domain (0 when the start point itself is outside).
class OrbitEscaped : public Error {
 public:
  explicit OrbitEscaped(std::size_t index)
      : Error("orbit escaped the domain at iterate " + std::to_string(index)),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class DegenerateCocycle : public Error {
 public:
  using Error::Error;
};

class DegenerateSplitting : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

class EmptySet : public Error {
 public:
  using Error::Error;
};

class BankMismatch : public Error {
 public:
  using Error::Error;
};

class CoverageUnreachable : public Error {
 public:
  using Error::Error;
};

class NoViableRectangle : public Error {
 public:
  using Error::Error;
};

class InfeasiblePeriod : public Error {
 public:
  using Error::Error;
};

class MissingOrbitContext : public Error {
 public:
  using Error::Error;
};

class CertificateNegative : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hsp
