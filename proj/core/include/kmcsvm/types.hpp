#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kmcsvm {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an input file cannot be parsed. The message carries the
/// file name and 1-based line number of the offending row.
struct ParseError : Error {
  using Error::Error;
};

// Label convention: +1 = aggressive, -1 = moderate. Fixed here and in the
// CSV format; nothing else in the library hard-codes driving semantics.
inline constexpr int kAggressiveLabel = +1;
inline constexpr int kModerateLabel = -1;

/// A point in feature space: longitudinal speed [km/h] and throttle
/// opening [0,1].
struct FeaturePoint {
  double speed = 0.0;
  double throttle = 0.0;
};

inline double squared_distance(const FeaturePoint& a, const FeaturePoint& b) {
  const double ds = a.speed - b.speed;
  const double dt = a.throttle - b.throttle;
  return ds * ds + dt * dt;
}

/// One telemetry point with its style label.
struct Sample {
  double speed = 0.0;     // km/h, >= 0
  double throttle = 0.0;  // dimensionless fraction in [0,1]
  int label = kAggressiveLabel;

  FeaturePoint point() const { return {speed, throttle}; }
};

/// A feature point paired with its class label, the unit SVM training and
/// clustering operate on.
struct LabeledPoint {
  FeaturePoint x;
  int y = kAggressiveLabel;
};

/// Ordered telemetry trace. Immutable by convention once built.
struct Dataset {
  std::vector<Sample> samples;
  double sample_rate = 50.0;  // Hz

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

/// Assignment of every sample to one of `subset_count` equal-size subsets,
/// used for cross-validation folds.
struct SubsetPartition {
  int subset_count = 0;
  std::vector<int> assignments;  // subset index per sample, parallel to Dataset
};

/// Shortest decimal representation that parses back to the same double;
/// used by every text format in the library.
std::string format_double(double v);

}  // namespace kmcsvm
