#pragma once

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <string>

namespace conjloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat43 = Eigen::Matrix<double, 4, 3>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Error hierarchy. Everything thrown by the library derives from Error so
// the CLI can map families of failures onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: outside a chart domain, non-positive axes, bad config.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: step-size underflow, singular metric, lost frame.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Fewer than two conjugate times were found before the horizon.
class HorizonTooShort : public NumericalError {
 public:
  HorizonTooShort(const std::string& what, Vec3 direction, double horizon)
      : NumericalError(what), direction_(direction), horizon_(horizon) {}
  const Vec3& direction() const { return direction_; }
  double horizon() const { return horizon_; }

 private:
  Vec3 direction_;
  double horizon_;
};

// The collapsing direction is not unique (R1 == R2).
class UmbilicAmbiguity : public Error {
 public:
  using Error::Error;
};

}  // namespace conjloc
