#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kmcsvm/types.hpp"

namespace kmcsvm {

enum class Style { aggressive, moderate };

std::string style_name(Style s);

/// One component of the speed mixture plus the throttle distribution
/// conditioned on it. Throttle is beta-distributed with the given mode;
/// larger concentration means tighter spread.
struct SpeedBand {
  double lo_kmh = 0.0;
  double hi_kmh = 0.0;
  double weight = 0.0;
  double throttle_mode = 0.0;
  double throttle_concentration = 8.0;  // > 2
};

struct StyleProfile {
  std::vector<SpeedBand> bands;   // weights sum to 1, bands within [0, 140]
  double noise_sd_speed = 0.5;    // km/h jitter
  double noise_sd_throttle = 0.02;
  double correlation = 0.95;      // AR(1) coefficient, [0, 1)
};

/// Throws Error if the profile violates its invariants.
void validate(const StyleProfile& profile);

/// Mixture mass falling inside [lo, hi] km/h, treating density as uniform
/// within each band.
double band_mass(const StyleProfile& profile, double lo, double hi);

/// Shipped calibrations for the two styles and two driver groups. The
/// constants live in one embedded profile-format text block per
/// (style, group); see parse_profile for the format.
StyleProfile default_profile(Style style, int group);

// Profile text format: key=value lines (correlation, noise_sd_speed,
// noise_sd_throttle) plus one "band=lo,hi,weight,mode,concentration" line
// per mixture component. '#' starts a comment.
StyleProfile parse_profile(std::istream& in, const std::string& name);
StyleProfile load_profile(const std::string& path);
void write_profile(const StyleProfile& profile, std::ostream& out);

struct GenConfig {
  double duration_seconds = 60.0;
  double sample_rate = 50.0;  // Hz
  std::uint64_t seed = 0;
  StyleProfile profile;
  int label = kAggressiveLabel;
};

/// Synthesizes duration*rate samples. The speed marginal follows the
/// profile's band mixture exactly (Gaussian-copula AR(1), so traces are
/// temporally smooth without distorting the marginal); throttle is drawn
/// from the current band's beta distribution and AR(1)-smoothed. Samples
/// are clamped to valid ranges and all carry cfg.label. Deterministic per
/// seed.
Dataset generate(const GenConfig& cfg);

struct CohortResult {
  Dataset data;          // runs concatenated, aggressive/moderate interleaved
  SubsetPartition runs;  // one subset per run, contiguous
};

/// Generates drivers_per_style drivers of each style, runs_per_driver
/// runs each, with per-driver and per-run seeds derived from base.seed.
/// base supplies the per-run duration and rate; profiles come from
/// default_profile(style, group).
CohortResult generate_cohort(int drivers_per_style, int runs_per_driver,
                             const GenConfig& base, int group = 1);

}  // namespace kmcsvm
