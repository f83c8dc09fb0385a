#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "kmcsvm/kmeans.hpp"
#include "kmcsvm/svm.hpp"
#include "kmcsvm/types.hpp"

namespace kmcsvm {

struct IntRange {
  int lo = -5;
  int hi = 10;
  int step = 1;

  std::vector<int> values() const;
  int count() const;
};

/// Exponential hyperparameter grid: C = c_base^M over M in m_range,
/// gamma = r_base^-(2N+1) over N in n_range.
struct GridSpec {
  double c_base = 2.0;
  double r_base = 2.0;
  IntRange m_range;
  IntRange n_range;
};

struct GridCell {
  int m = 0;
  int n = 0;
  double c = 0.0;
  double gamma = 0.0;
};

/// Cartesian product of the spec's ranges, M-major then N. Exponents are
/// evaluated by repeated multiplication so power-of-two cells are exact.
std::vector<GridCell> make_grid(const GridSpec& spec);

struct CellScore {
  GridCell cell;
  double score = 0.0;
  bool ok = false;  // false: every fold failed for this cell
};

struct GridResult {
  std::vector<CellScore> scores;
  int best_m = 0;
  int best_n = 0;
  double best_c = 0.0;
  double best_gamma = 0.0;
  double best_score = 0.0;
};

/// Leave-one-subset-out cross-validation accuracy for one (C, gamma)
/// cell. Each fold holds out one subset, optionally reduces the training
/// remainder per `cluster_rule`, trains, and scores overall accuracy on
/// the held-out raw samples. Folds whose training remainder has a single
/// class are skipped with a warning; if every fold degenerates an Error
/// is thrown.
double cv_score(const Dataset& data, double C, double gamma, const SubsetPartition& part,
                const std::optional<KRule>& cluster_rule, std::uint64_t seed);

/// Evaluates cv_score on every grid cell (cells run concurrently, capped
/// by KMCSVM_THREADS; per-cell seeds derive from `seed` so thread count
/// never changes results). Ties in the argmax resolve to the smallest C,
/// then the largest gamma.
GridResult grid_search(const Dataset& data, const GridSpec& spec, int folds,
                       const std::optional<KRule>& cluster_rule, std::uint64_t seed);

/// TSV rows (M, N, C, gamma, score) for heat-map plotting.
void write_grid_tsv(const GridResult& result, std::ostream& out);
GridResult read_grid_tsv(std::istream& in, const std::string& name);

/// Worker cap from the KMCSVM_THREADS environment variable (0 or unset:
/// hardware concurrency).
int thread_limit();

}  // namespace kmcsvm
