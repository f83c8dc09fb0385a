#include "kmcsvm/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kmcsvm/rng.hpp"

namespace kmcsvm {

int choose_k(int n, const KRule& rule) {
  if (n < 2) throw Error("choose_k requires n >= 2, got " + std::to_string(n));
  long k = 0;
  switch (rule.kind) {
    case KRule::Kind::SqrtNOver3:
      k = std::llround(std::sqrt(static_cast<double>(n) / 3.0));
      break;
    case KRule::Kind::SqrtNOver2:
      k = std::llround(std::sqrt(static_cast<double>(n) / 2.0));
      break;
    case KRule::Kind::Explicit:
      k = rule.explicit_k;
      break;
  }
  const long upper = std::max(1, n / 2);
  return static_cast<int>(std::clamp(k, 1L, upper));
}

namespace {

int nearest_centroid(const FeaturePoint& p, const std::vector<FeaturePoint>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < static_cast<int>(centroids.size()); ++j) {
    const double d = squared_distance(p, centroids[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

std::vector<FeaturePoint> init_kmeanspp(std::span<const FeaturePoint> points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<FeaturePoint> centroids;
  centroids.reserve(k);
  std::vector<bool> chosen(n, false);
  std::vector<double> dist2(n, std::numeric_limits<double>::infinity());

  std::size_t first = rng.below(n);
  centroids.push_back(points[first]);
  chosen[first] = true;

  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dist2[i] = std::min(dist2[i], squared_distance(points[i], centroids.back()));
      total += dist2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // fp round-off at the tail
        for (std::size_t i = n; i-- > 0;) {
          if (dist2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    }
    if (pick == n) {
      // All remaining mass is zero (duplicate-heavy input): take the first
      // unchosen index so K stays as requested.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    centroids.push_back(points[pick]);
    chosen[pick] = true;
  }
  return centroids;
}

std::vector<FeaturePoint> init_random(std::span<const FeaturePoint> points, int k, Rng& rng) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<FeaturePoint> centroids;
  centroids.reserve(k);
  for (int j = 0; j < k; ++j) centroids.push_back(points[order[j]]);
  return centroids;
}

}  // namespace

ClusterSet lloyd(std::span<const FeaturePoint> points, int k, std::uint64_t seed,
                 const LloydOptions& opts) {
  const int n = static_cast<int>(points.size());
  if (k < 1) throw Error("lloyd requires K >= 1");
  if (k > n) {
    throw Error("lloyd requires K <= number of points (" + std::to_string(k) + " > " +
                std::to_string(n) + ")");
  }
  if (opts.max_iter < 1) throw Error("lloyd requires max_iter >= 1");

  Rng rng(seed);
  ClusterSet cs;
  cs.centroids = opts.kmeanspp ? init_kmeanspp(points, k, rng) : init_random(points, k, rng);
  cs.assignments.assign(n, 0);

  std::vector<double> sum_speed(k), sum_throttle(k);
  std::vector<int> counts(k);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    for (int i = 0; i < n; ++i) cs.assignments[i] = nearest_centroid(points[i], cs.centroids);

    std::fill(sum_speed.begin(), sum_speed.end(), 0.0);
    std::fill(sum_throttle.begin(), sum_throttle.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      const int c = cs.assignments[i];
      sum_speed[c] += points[i].speed;
      sum_throttle[c] += points[i].throttle;
      ++counts[c];
    }

    // Empty-cluster repair: promote the point farthest from its centroid
    // (among clusters that can spare one) to a singleton, keeping K fixed.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int far_i = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[cs.assignments[i]] < 2) continue;
        const double d = squared_distance(points[i], cs.centroids[cs.assignments[i]]);
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      if (far_i < 0) break;  // all clusters singleton, nothing to move
      const int donor = cs.assignments[far_i];
      sum_speed[donor] -= points[far_i].speed;
      sum_throttle[donor] -= points[far_i].throttle;
      --counts[donor];
      cs.assignments[far_i] = c;
      sum_speed[c] = points[far_i].speed;
      sum_throttle[c] = points[far_i].throttle;
      counts[c] = 1;
    }

    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      const FeaturePoint updated{sum_speed[c] / counts[c], sum_throttle[c] / counts[c]};
      shift = std::max(shift, std::sqrt(squared_distance(updated, cs.centroids[c])));
      cs.centroids[c] = updated;
    }

    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      inertia += squared_distance(points[i], cs.centroids[cs.assignments[i]]);
    }
    cs.inertia_trace.push_back(inertia);
    cs.inertia = inertia;

    if (shift < opts.tol) break;
  }

  cs.member_counts = counts;
  return cs;
}

PerLabelClusters cluster_per_label(const Dataset& ds, const KRule& rule, std::uint64_t seed,
                                   const LloydOptions& opts) {
  std::vector<FeaturePoint> pos, neg;
  for (const Sample& s : ds.samples) {
    (s.label == kAggressiveLabel ? pos : neg).push_back(s.point());
  }
  if (pos.empty()) throw Error("cluster_per_label: class +1 absent");
  if (neg.empty()) throw Error("cluster_per_label: class -1 absent");

  // Both classes share one derived seed: a run's clustering depends only on
  // the points of that class, not on which label they carry.
  const std::uint64_t class_seed = derive_seed(seed, 0xC1A55);

  PerLabelClusters pc;
  pc.aggressive = lloyd(pos, choose_k(static_cast<int>(pos.size()), rule), class_seed, opts);
  pc.aggressive.label = kAggressiveLabel;
  pc.moderate = lloyd(neg, choose_k(static_cast<int>(neg.size()), rule), class_seed, opts);
  pc.moderate.label = kModerateLabel;
  return pc;
}

Dataset to_dataset(const ClusterSet& cs, double sample_rate) {
  Dataset ds;
  ds.sample_rate = sample_rate;
  ds.samples.reserve(cs.centroids.size());
  for (const FeaturePoint& c : cs.centroids) {
    ds.samples.push_back({c.speed, c.throttle, cs.label});
  }
  return ds;
}

std::vector<LabeledPoint> to_labeled_points(const PerLabelClusters& pc) {
  std::vector<LabeledPoint> pts;
  pts.reserve(pc.aggressive.centroids.size() + pc.moderate.centroids.size());
  for (const FeaturePoint& c : pc.aggressive.centroids) pts.push_back({c, pc.aggressive.label});
  for (const FeaturePoint& c : pc.moderate.centroids) pts.push_back({c, pc.moderate.label});
  return pts;
}

}  // namespace kmcsvm
