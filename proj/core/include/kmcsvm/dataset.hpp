#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kmcsvm/types.hpp"

namespace kmcsvm {

// CSV format: header "speed_kmh,throttle,label", one sample per row,
// '.' decimal point, label serialized as 1 or -1, LF or CRLF line ends.

/// Reads a dataset from `path`. Throws ParseError on malformed rows
/// (message cites the 1-based line number) and Error on I/O failure or an
/// empty data section.
Dataset load_csv(const std::string& path);

/// Stream variant of load_csv; `name` is used in error messages.
Dataset parse_csv(std::istream& in, const std::string& name);

/// Writes `ds` to `path` with enough digits that load_csv(save_csv(ds))
/// reproduces ds exactly. Throws on I/O failure or an empty dataset.
void save_csv(const Dataset& ds, const std::string& path);
void write_csv(const Dataset& ds, std::ostream& out);

/// Splits `ds` into `subset_count` subsets whose sizes differ by at most
/// one. Shuffled by seed unless `contiguous`, which keeps temporal blocks.
/// Requires 1 < subset_count <= |ds|.
SubsetPartition partition(const Dataset& ds, int subset_count, std::uint64_t seed,
                          bool contiguous = false);

/// Optional affine feature transform (off by default everywhere; training
/// and evaluation consume raw features unless a caller applies this).
struct AffineScaler {
  double speed_offset = 0.0;
  double speed_scale = 1.0;
  double throttle_offset = 0.0;
  double throttle_scale = 1.0;

  FeaturePoint apply(const FeaturePoint& p) const {
    return {(p.speed - speed_offset) * speed_scale,
            (p.throttle - throttle_offset) * throttle_scale};
  }
  FeaturePoint invert(const FeaturePoint& p) const {
    return {p.speed / speed_scale + speed_offset,
            p.throttle / throttle_scale + throttle_offset};
  }
};

/// Fits a standardizing scaler (zero mean, unit variance per feature).
AffineScaler fit_standard_scaler(const Dataset& ds);

std::vector<LabeledPoint> to_labeled_points(const Dataset& ds);

/// FNV-1a digest over the canonical byte representation; used to assert
/// that benchmark arms saw identical inputs.
std::uint64_t dataset_checksum(const Dataset& ds);

}  // namespace kmcsvm
