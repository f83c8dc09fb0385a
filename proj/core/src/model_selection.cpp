#include "kmcsvm/model_selection.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "kmcsvm/dataset.hpp"
#include "kmcsvm/rng.hpp"

namespace kmcsvm {

std::vector<int> IntRange::values() const {
  if (step <= 0) throw Error("IntRange step must be positive");
  std::vector<int> out;
  for (int v = lo; v <= hi; v += step) out.push_back(v);
  return out;
}

int IntRange::count() const { return static_cast<int>(values().size()); }

namespace {

// Repeated multiplication keeps power-of-two cells exact (2^7 = 128,
// 2^-9 = 0.001953125) where std::pow need not.
double pow_int(double base, int exponent) {
  if (exponent < 0) return 1.0 / pow_int(base, -exponent);
  double result = 1.0;
  double b = base;
  unsigned e = static_cast<unsigned>(exponent);
  while (e != 0) {
    if (e & 1u) result *= b;
    b *= b;
    e >>= 1;
  }
  return result;
}

}  // namespace

std::vector<GridCell> make_grid(const GridSpec& spec) {
  if (!(spec.c_base > 1.0) || !(spec.r_base > 1.0)) {
    throw Error("grid bases must be > 1");
  }
  const auto ms = spec.m_range.values();
  const auto ns = spec.n_range.values();
  if (ms.empty() || ns.empty()) throw Error("grid ranges must be nonempty");

  std::vector<GridCell> cells;
  cells.reserve(ms.size() * ns.size());
  for (int m : ms) {
    const double c = pow_int(spec.c_base, m);
    for (int n : ns) {
      cells.push_back({m, n, c, pow_int(spec.r_base, -(2 * n + 1))});
    }
  }
  return cells;
}

double cv_score(const Dataset& data, double C, double gamma, const SubsetPartition& part,
                const std::optional<KRule>& cluster_rule, std::uint64_t seed) {
  if (part.assignments.size() != data.size()) {
    throw Error("partition does not cover the dataset");
  }
  const int z = part.subset_count;
  TrainConfig cfg;
  cfg.C = C;
  cfg.kernel.gamma = gamma;

  double score_sum = 0.0;
  int folds_used = 0;
  for (int fold = 0; fold < z; ++fold) {
    Dataset train;
    train.sample_rate = data.sample_rate;
    std::vector<const Sample*> held_out;
    long train_pos = 0, train_neg = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (part.assignments[i] == fold) {
        held_out.push_back(&data.samples[i]);
      } else {
        train.samples.push_back(data.samples[i]);
        (data.samples[i].label == kAggressiveLabel ? train_pos : train_neg) += 1;
      }
    }
    const long per_class_min = cluster_rule ? 2 : 1;
    if (train_pos < per_class_min || train_neg < per_class_min || held_out.empty()) {
      std::cerr << "cv_score: skipping degenerate fold " << fold << " (training remainder "
                << train_pos << "/+1, " << train_neg << "/-1)\n";
      continue;
    }

    const std::uint64_t fold_seed = derive_seed(seed, static_cast<std::uint64_t>(fold));
    std::vector<LabeledPoint> train_points =
        cluster_rule ? to_labeled_points(cluster_per_label(train, *cluster_rule, fold_seed))
                     : to_labeled_points(train);

    SvmModel model;
    try {
      model = train_smo(train_points, cfg, derive_seed(fold_seed, 0x7EA1));
    } catch (const ConvergenceError& e) {
      // Score the best-so-far model; the cell stays comparable.
      model = e.best_model;
    }

    long correct = 0;
    for (const Sample* s : held_out) {
      if (predict(model, s->point()) == s->label) ++correct;
    }
    score_sum += static_cast<double>(correct) / static_cast<double>(held_out.size());
    ++folds_used;
  }
  if (folds_used == 0) throw Error("cv_score: all folds degenerate");
  return score_sum / folds_used;
}

int thread_limit() {
  if (const char* env = std::getenv("KMCSVM_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

GridResult grid_search(const Dataset& data, const GridSpec& spec, int folds,
                       const std::optional<KRule>& cluster_rule, std::uint64_t seed) {
  const std::vector<GridCell> cells = make_grid(spec);
  const SubsetPartition part = partition(data, folds, derive_seed(seed, 0xF01D5));

  GridResult result;
  result.scores.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) result.scores[i].cell = cells[i];

  // Cells are independent; per-cell seeds derive from the master seed so
  // the worker count cannot change any score.
  std::atomic<std::size_t> next{0};
  std::string first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cells.size()) return;
      CellScore& cs = result.scores[idx];
      try {
        cs.score = cv_score(data, cs.cell.c, cs.cell.gamma, part, cluster_rule,
                            derive_seed(seed, 1000 + idx));
        cs.ok = true;
      } catch (const std::exception& e) {
        cs.ok = false;
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };

  const int workers = std::max(1, std::min<int>(thread_limit(), static_cast<int>(cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Argmax in cell order: ties resolve to the smallest C, then the largest
  // gamma, which is exactly the iteration order.
  bool any = false;
  for (const CellScore& cs : result.scores) {
    if (!cs.ok) continue;
    if (!any || cs.score > result.best_score) {
      any = true;
      result.best_score = cs.score;
      result.best_m = cs.cell.m;
      result.best_n = cs.cell.n;
      result.best_c = cs.cell.c;
      result.best_gamma = cs.cell.gamma;
    }
  }
  if (!any) {
    throw Error("grid_search: every cell failed" +
                (first_error.empty() ? std::string{} : " (first error: " + first_error + ")"));
  }
  return result;
}

void write_grid_tsv(const GridResult& result, std::ostream& out) {
  out << "M\tN\tC\tgamma\tscore\n";
  for (const CellScore& cs : result.scores) {
    out << cs.cell.m << '\t' << cs.cell.n << '\t' << format_double(cs.cell.c) << '\t'
        << format_double(cs.cell.gamma) << '\t' << (cs.ok ? format_double(cs.score) : "nan")
        << '\n';
  }
}

GridResult read_grid_tsv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty grid file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "M\tN\tC\tgamma\tscore") throw ParseError(name + ": unexpected grid header");

  GridResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    CellScore cs;
    std::string score_text;
    if (!(row >> cs.cell.m >> cs.cell.n >> cs.cell.c >> cs.cell.gamma >> score_text)) {
      throw ParseError(name + ": malformed grid row at line " + std::to_string(line_no));
    }
    if (score_text == "nan") {
      cs.ok = false;
    } else {
      cs.score = std::strtod(score_text.c_str(), nullptr);
      cs.ok = true;
    }
    result.scores.push_back(cs);
  }

  bool any = false;
  for (const CellScore& cs : result.scores) {
    if (cs.ok && (!any || cs.score > result.best_score)) {
      any = true;
      result.best_score = cs.score;
      result.best_m = cs.cell.m;
      result.best_n = cs.cell.n;
      result.best_c = cs.cell.c;
      result.best_gamma = cs.cell.gamma;
    }
  }
  return result;
}

}  // namespace kmcsvm
