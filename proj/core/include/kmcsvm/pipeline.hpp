#pragma once

#include <cstdint>
#include <string>

#include "kmcsvm/kmeans.hpp"
#include "kmcsvm/svm.hpp"
#include "kmcsvm/types.hpp"

namespace kmcsvm {

enum class EvalMode { offline, online };

/// Per-class recognition accuracies with their exact count ratios.
struct EvalReport {
  double accuracy_agg = 0.0;  // correct_agg / total_agg
  double accuracy_mod = 0.0;  // correct_mod / total_mod
  long correct_agg = 0;
  long total_agg = 0;
  long correct_mod = 0;
  long total_mod = 0;
  EvalMode mode = EvalMode::offline;
};

/// Builds a report from confusion counts; the accuracy fields are always
/// the exact rational counts (0/0 yields accuracy 0).
EvalReport make_eval_report(long correct_agg, long total_agg, long correct_mod,
                            long total_mod, EvalMode mode);

struct WindowConfig {
  double tau_seconds = 1.4;
  double sample_rate = 50.0;
};

/// Samples per window: round(tau * rate). Throws if that is < 1.
int window_length_samples(const WindowConfig& wc);

/// Number of complete disjoint windows in a stream of `stream_len`
/// samples; the trailing partial window is dropped.
long window_count(std::size_t stream_len, const WindowConfig& wc);

struct KmcTrainResult {
  SvmModel model;
  ClusterSet clusters_agg;
  ClusterSet clusters_mod;
  double cluster_seconds = 0.0;
  double train_seconds = 0.0;
};

/// Clusters each class of `train` per `rule`, then trains the SVM on the
/// labeled centroids. Wall-clock split between the two phases is
/// reported.
KmcTrainResult train_kmc_svm(const Dataset& train, const KRule& rule,
                             const TrainConfig& cfg, std::uint64_t seed);

struct OfflineOptions {
  bool raw_samples = false;  // score raw test samples instead of centroids
  LloydOptions lloyd;
};

/// Offline protocol: the test set is clustered per label and each test
/// centroid's predicted label is scored per class. With raw_samples the
/// raw rows are scored instead.
EvalReport evaluate_offline(const SvmModel& model, const Dataset& test, const KRule& rule,
                            std::uint64_t seed, const OfflineOptions& opts = {});

/// Online protocol: consecutive disjoint windows of round(tau*rate)
/// samples are each reduced to their mean feature point and predicted;
/// the window's true label is the label of its samples (majority when a
/// window straddles runs). Deterministic; the seed is reserved for
/// clustering variants.
EvalReport online_evaluate(const SvmModel& model, const Dataset& stream,
                           const WindowConfig& wc, std::uint64_t seed = 0);

enum class Method { kmc_svm, svm };

std::string method_name(Method m);

struct BenchReport {
  Method method = Method::kmc_svm;
  double train_seconds = 0.0;    // for kmc_svm: clustering + training
  double cluster_seconds = 0.0;  // kmc_svm only, included in train_seconds
  std::size_t sv_count = 0;
  bool converged = true;
  EvalReport eval;
};

struct BenchPair {
  BenchReport kmc;
  BenchReport plain;
};

/// Runs kMC-SVM and plain SVM on identical inputs and reports timings,
/// support vector counts and offline evaluations. The two arms run
/// sequentially so timings are comparable; input checksums are asserted
/// between arms. A non-convergent plain SVM is reported with
/// converged=false using its best-so-far model instead of aborting.
BenchPair bench_compare(const Dataset& train, const Dataset& test, const KRule& rule,
                        const TrainConfig& cfg, std::uint64_t seed);

}  // namespace kmcsvm
