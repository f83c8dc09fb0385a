#include "kmcsvm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "kmcsvm/dataset.hpp"
#include "kmcsvm/rng.hpp"

namespace kmcsvm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
  return std::max(1e-9, static_cast<double>(ns.count()) * 1e-9);
}

}  // namespace

EvalReport make_eval_report(long correct_agg, long total_agg, long correct_mod, long total_mod,
                            EvalMode mode) {
  if (correct_agg < 0 || correct_mod < 0 || correct_agg > total_agg ||
      correct_mod > total_mod) {
    throw Error("invalid confusion counts");
  }
  EvalReport r;
  r.correct_agg = correct_agg;
  r.total_agg = total_agg;
  r.correct_mod = correct_mod;
  r.total_mod = total_mod;
  r.accuracy_agg = total_agg > 0 ? static_cast<double>(correct_agg) / total_agg : 0.0;
  r.accuracy_mod = total_mod > 0 ? static_cast<double>(correct_mod) / total_mod : 0.0;
  r.mode = mode;
  return r;
}

int window_length_samples(const WindowConfig& wc) {
  if (!(wc.tau_seconds > 0) || !(wc.sample_rate > 0)) {
    throw Error("window config requires tau > 0 and rate > 0");
  }
  const long len = std::lround(wc.tau_seconds * wc.sample_rate);
  if (len < 1) throw Error("window shorter than one sample");
  return static_cast<int>(len);
}

long window_count(std::size_t stream_len, const WindowConfig& wc) {
  return static_cast<long>(stream_len) / window_length_samples(wc);
}

KmcTrainResult train_kmc_svm(const Dataset& train, const KRule& rule, const TrainConfig& cfg,
                             std::uint64_t seed) {
  KmcTrainResult out;

  auto t0 = Clock::now();
  PerLabelClusters pc = cluster_per_label(train, rule, derive_seed(seed, 1));
  out.cluster_seconds = seconds_since(t0);

  const std::vector<LabeledPoint> centroids = to_labeled_points(pc);
  t0 = Clock::now();
  out.model = train_smo(centroids, cfg, derive_seed(seed, 2));
  out.train_seconds = seconds_since(t0);

  out.clusters_agg = std::move(pc.aggressive);
  out.clusters_mod = std::move(pc.moderate);
  return out;
}

EvalReport evaluate_offline(const SvmModel& model, const Dataset& test, const KRule& rule,
                            std::uint64_t seed, const OfflineOptions& opts) {
  long correct_agg = 0, total_agg = 0, correct_mod = 0, total_mod = 0;
  if (opts.raw_samples) {
    for (const Sample& s : test.samples) {
      const int predicted = predict(model, s.point());
      if (s.label == kAggressiveLabel) {
        ++total_agg;
        if (predicted == s.label) ++correct_agg;
      } else {
        ++total_mod;
        if (predicted == s.label) ++correct_mod;
      }
    }
  } else {
    const PerLabelClusters pc = cluster_per_label(test, rule, seed, opts.lloyd);
    total_agg = static_cast<long>(pc.aggressive.centroids.size());
    for (const FeaturePoint& c : pc.aggressive.centroids) {
      if (predict(model, c) == kAggressiveLabel) ++correct_agg;
    }
    total_mod = static_cast<long>(pc.moderate.centroids.size());
    for (const FeaturePoint& c : pc.moderate.centroids) {
      if (predict(model, c) == kModerateLabel) ++correct_mod;
    }
  }
  return make_eval_report(correct_agg, total_agg, correct_mod, total_mod, EvalMode::offline);
}

EvalReport online_evaluate(const SvmModel& model, const Dataset& stream, const WindowConfig& wc,
                           std::uint64_t /*seed*/) {
  const int len = window_length_samples(wc);
  const long windows = static_cast<long>(stream.size()) / len;
  if (windows < 1) {
    throw Error("stream of " + std::to_string(stream.size()) +
                " samples is shorter than one window (" + std::to_string(len) + ")");
  }

  long correct_agg = 0, total_agg = 0, correct_mod = 0, total_mod = 0;
  for (long w = 0; w < windows; ++w) {
    const std::size_t begin = static_cast<std::size_t>(w) * len;
    double mean_speed = 0.0, mean_throttle = 0.0;
    long positives = 0;
    for (std::size_t i = begin; i < begin + len; ++i) {
      mean_speed += stream.samples[i].speed;
      mean_throttle += stream.samples[i].throttle;
      if (stream.samples[i].label == kAggressiveLabel) ++positives;
    }
    mean_speed /= len;
    mean_throttle /= len;
    // Streams are single-driver, so windows are single-label; majority
    // covers a window straddling concatenated runs (tie: first sample).
    int truth;
    if (positives * 2 > len) {
      truth = kAggressiveLabel;
    } else if (positives * 2 < len) {
      truth = kModerateLabel;
    } else {
      truth = stream.samples[begin].label;
    }
    const int predicted = predict(model, {mean_speed, mean_throttle});
    if (truth == kAggressiveLabel) {
      ++total_agg;
      if (predicted == truth) ++correct_agg;
    } else {
      ++total_mod;
      if (predicted == truth) ++correct_mod;
    }
  }
  return make_eval_report(correct_agg, total_agg, correct_mod, total_mod, EvalMode::online);
}

std::string method_name(Method m) { return m == Method::kmc_svm ? "kmc_svm" : "svm"; }

BenchPair bench_compare(const Dataset& train, const Dataset& test, const KRule& rule,
                        const TrainConfig& cfg, std::uint64_t seed) {
  const std::uint64_t train_sum = dataset_checksum(train);
  const std::uint64_t test_sum = dataset_checksum(test);
  // Both arms score with the same evaluation seed, so they face the same
  // clustered test set.
  const std::uint64_t eval_seed = derive_seed(seed, 2);

  BenchPair pair;

  const KmcTrainResult kmc = train_kmc_svm(train, rule, cfg, derive_seed(seed, 1));
  pair.kmc.method = Method::kmc_svm;
  pair.kmc.train_seconds = kmc.cluster_seconds + kmc.train_seconds;
  pair.kmc.cluster_seconds = kmc.cluster_seconds;
  pair.kmc.sv_count = sv_count(kmc.model);
  pair.kmc.converged = true;
  pair.kmc.eval = evaluate_offline(kmc.model, test, rule, eval_seed);

  if (dataset_checksum(train) != train_sum || dataset_checksum(test) != test_sum) {
    throw Error("bench_compare: inputs changed between arms");
  }

  const std::vector<LabeledPoint> raw = to_labeled_points(train);
  const auto t0 = Clock::now();
  SvmModel plain;
  bool converged = true;
  try {
    plain = train_smo(raw, cfg, derive_seed(seed, 3));
  } catch (const ConvergenceError& e) {
    plain = e.best_model;
    converged = false;
  }
  pair.plain.method = Method::svm;
  pair.plain.train_seconds = seconds_since(t0);
  pair.plain.cluster_seconds = 0.0;
  pair.plain.sv_count = sv_count(plain);
  pair.plain.converged = converged;
  pair.plain.eval = evaluate_offline(plain, test, rule, eval_seed);

  if (dataset_checksum(train) != train_sum || dataset_checksum(test) != test_sum) {
    throw Error("bench_compare: inputs changed between arms");
  }
  return pair;
}

}  // namespace kmcsvm
