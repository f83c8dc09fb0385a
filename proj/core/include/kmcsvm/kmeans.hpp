#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kmcsvm/types.hpp"

namespace kmcsvm {

/// Rule for choosing the cluster count from the sample count.
struct KRule {
  enum class Kind { SqrtNOver3, SqrtNOver2, Explicit };
  Kind kind = Kind::SqrtNOver3;
  int explicit_k = 0;

  static KRule sqrt_n_over_3() { return {Kind::SqrtNOver3, 0}; }
  static KRule sqrt_n_over_2() { return {Kind::SqrtNOver2, 0}; }
  static KRule explicit_k_of(int k) { return {Kind::Explicit, k}; }
};

/// K = round(sqrt(n/3)) or round(sqrt(n/2)) per rule, clamped to
/// [1, n/2]; an explicit K is clamped the same way. Requires n >= 2.
int choose_k(int n, const KRule& rule);

/// Result of one k-means run over a single label class.
struct ClusterSet {
  std::vector<FeaturePoint> centroids;
  int label = 0;                       // class of all members
  std::vector<int> member_counts;      // samples per centroid, all >= 1
  std::vector<int> assignments;        // final cluster index per input point
  double inertia = 0.0;                // sum of squared distances at exit
  std::vector<double> inertia_trace;   // objective after each iteration
};

struct LloydOptions {
  int max_iter = 300;
  double tol = 1e-6;       // max centroid displacement, raw feature units
  bool kmeanspp = true;    // false: plain random-point initialization
};

/// Lloyd iterations with k-means++ seeding. Deterministic for a fixed
/// seed. Empty clusters are repaired by promoting the point farthest from
/// its centroid to a singleton, so every member count stays >= 1. The
/// caller assigns the class label.
ClusterSet lloyd(std::span<const FeaturePoint> points, int k, std::uint64_t seed,
                 const LloydOptions& opts = {});

struct PerLabelClusters {
  ClusterSet aggressive;  // label +1
  ClusterSet moderate;    // label -1
};

/// Runs lloyd independently on the +1 and -1 subsets of `ds`; K for each
/// subset comes from that subset's own size via choose_k. Throws if a
/// class is absent.
PerLabelClusters cluster_per_label(const Dataset& ds, const KRule& rule, std::uint64_t seed,
                                   const LloydOptions& opts = {});

/// Centroids re-expressed as labeled samples (e.g. for save_csv).
Dataset to_dataset(const ClusterSet& cs, double sample_rate = 50.0);

std::vector<LabeledPoint> to_labeled_points(const PerLabelClusters& pc);

}  // namespace kmcsvm
