#include "kmcsvm/svm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <list>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "kmcsvm/rng.hpp"

namespace kmcsvm {

double rbf(const FeaturePoint& a, const FeaturePoint& b, const KernelParams& kp) {
  return std::exp(-kp.gamma * squared_distance(a, b));
}

ConvergenceError::ConvergenceError(SvmModel best, double violation)
    : Error("SMO did not converge: residual KKT violation " + std::to_string(violation)),
      best_model(std::move(best)),
      max_kkt_violation(violation) {}

namespace {

// Gram rows: dense lazily-filled matrix up to kDenseLimit points, LRU row
// cache above. Purely a speed knob; results never depend on it.
class KernelCache {
 public:
  static constexpr int kDenseLimit = 4096;

  KernelCache(std::span<const LabeledPoint> data, double gamma,
              std::size_t budget_bytes = std::size_t{256} << 20)
      : data_(data), gamma_(gamma), n_(static_cast<int>(data.size())) {
    if (n_ <= kDenseLimit) {
      dense_ = true;
      rows_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
      ready_.assign(n_, false);
    } else {
      const std::size_t row_bytes = sizeof(double) * static_cast<std::size_t>(n_);
      capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
    }
  }

  const double* row(int i) {
    if (dense_) {
      double* r = rows_.data() + static_cast<std::size_t>(i) * n_;
      if (!ready_[i]) {
        fill_row(i, r);
        ready_[i] = true;
      }
      return r;
    }
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second.data();
    }
    if (lru_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    lru_.emplace_front(i, std::vector<double>(n_));
    fill_row(i, lru_.front().second.data());
    index_[i] = lru_.begin();
    return lru_.front().second.data();
  }

 private:
  void fill_row(int i, double* out) const {
    const FeaturePoint& p = data_[i].x;
    for (int j = 0; j < n_; ++j) {
      out[j] = std::exp(-gamma_ * squared_distance(p, data_[j].x));
    }
  }

  std::span<const LabeledPoint> data_;
  double gamma_;
  int n_;
  bool dense_ = false;
  std::vector<double> rows_;
  std::vector<char> ready_;
  std::size_t capacity_ = 0;
  std::list<std::pair<int, std::vector<double>>> lru_;
  std::unordered_map<int, std::list<std::pair<int, std::vector<double>>>::iterator> index_;
};

class SmoSolver {
 public:
  SmoSolver(std::span<const LabeledPoint> data, const TrainConfig& cfg, std::uint64_t seed)
      : data_(data),
        cfg_(cfg),
        n_(static_cast<int>(data.size())),
        zero_thresh_(1e-8 * cfg.C),
        cache_(data, cfg.kernel.gamma),
        rng_(seed) {
    alpha_.assign(n_, 0.0);
    expansion_.assign(n_, 0.0);
    stall_budget_ = static_cast<long long>(cfg_.max_passes) * n_;
    update_belt_ = 1'000'000 + 100LL * n_;
  }

  SvmModel solve() {
    for (;;) {
      const double b = compute_bias();
      int worst = -1;
      double viol = 0.0;
      for (int i = 0; i < n_; ++i) {
        const double v = violation(i, b);
        if (v > viol) {
          viol = v;
          worst = i;
        }
      }
      if (viol <= cfg_.kkt_tol) break;
      if (stall_ > stall_budget_ || updates_ > update_belt_) give_up(viol);
      if (try_partners(worst)) continue;

      // Seeded random sweep: examine every violator in shuffled order and
      // take the first pair that moves.
      std::vector<int> order(n_);
      std::iota(order.begin(), order.end(), 0);
      rng_.shuffle(order);
      bool progressed = false;
      for (int i : order) {
        if (stall_ > stall_budget_) break;
        if (violation(i, b) > cfg_.kkt_tol && try_partners(i)) {
          progressed = true;
          break;
        }
      }
      if (!progressed) give_up(viol);
    }
    return extract(compute_bias());
  }

 private:
  int y(int i) const { return data_[i].y; }
  double err(int i) const { return expansion_[i] - y(i); }  // bias-free error
  bool at_lower(int i) const { return alpha_[i] <= zero_thresh_; }
  bool at_upper(int i) const { return alpha_[i] >= cfg_.C - zero_thresh_; }
  bool is_margin(int i) const { return !at_lower(i) && !at_upper(i); }

  double violation(int i, double b) const {
    const double margin = y(i) * (expansion_[i] + b) - 1.0;
    if (at_lower(i)) return std::max(0.0, -margin);
    if (at_upper(i)) return std::max(0.0, margin);
    return std::abs(margin);
  }

  // Mean bias over margin vectors; with none, the midpoint of the interval
  // the bound constraints leave for b.
  double compute_bias() const {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n_; ++i) {
      if (is_margin(i)) {
        sum += y(i) - expansion_[i];
        ++count;
      }
    }
    if (count > 0) return sum / count;

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_; ++i) {
      const double f = y(i) - expansion_[i];
      const bool lower_side = (y(i) > 0) == at_lower(i);
      if (lower_side) {
        lo = std::max(lo, f);
      } else {
        hi = std::min(hi, f);
      }
    }
    if (std::isinf(lo) && std::isinf(hi)) return 0.0;
    if (std::isinf(lo)) return hi;
    if (std::isinf(hi)) return lo;
    return 0.5 * (lo + hi);
  }

  // Restricted dual value with the pair (i1, i2) moved to a2cand along the
  // equality constraint; bias-free, used only when the analytic step is
  // degenerate (identical points).
  double pair_objective(int i1, int i2, double k12, double a2cand) const {
    const double a1 = alpha_[i1], a2 = alpha_[i2];
    const double y1 = y(i1), y2 = y(i2);
    const double sgn = y1 * y2;
    const double a1cand = a1 + sgn * (a2 - a2cand);
    const double v1 = expansion_[i1] - a1 * y1 - a2 * y2 * k12;  // K11 = 1
    const double v2 = expansion_[i2] - a1 * y1 * k12 - a2 * y2;  // K22 = 1
    return a1cand + a2cand - 0.5 * (a1cand * a1cand + a2cand * a2cand) -
           sgn * a1cand * a2cand * k12 - y1 * a1cand * v1 - y2 * a2cand * v2;
  }

  bool take_step(int i1, int i2) {
    if (i1 == i2) return false;
    const double C = cfg_.C;
    const double a1 = alpha_[i1], a2 = alpha_[i2];
    const int y1 = y(i1), y2 = y(i2);
    const double sgn = y1 * y2;

    double L, H;
    if (sgn > 0) {
      L = std::max(0.0, a1 + a2 - C);
      H = std::min(C, a1 + a2);
    } else {
      L = std::max(0.0, a2 - a1);
      H = std::min(C, C + a2 - a1);
    }
    if (H - L < 1e-12 * C) return false;

    const double* row1 = cache_.row(i1);
    const double k12 = row1[i2];
    const double eta = 2.0 - 2.0 * k12;  // K11 = K22 = 1 for the RBF kernel

    double a2new;
    if (eta > 1e-12) {
      a2new = a2 + y2 * (err(i1) - err(i2)) / eta;
      a2new = std::clamp(a2new, L, H);
    } else {
      const double obj_l = pair_objective(i1, i2, k12, L);
      const double obj_h = pair_objective(i1, i2, k12, H);
      if (obj_l > obj_h + 1e-12) {
        a2new = L;
      } else if (obj_h > obj_l + 1e-12) {
        a2new = H;
      } else {
        return false;
      }
    }
    if (std::abs(a2new - a2) < 1e-12 * (a2new + a2 + 1e-12)) return false;

    const double a1new = std::clamp(a1 + sgn * (a2 - a2new), 0.0, C);
    const double d1 = y1 * (a1new - a1);
    const double d2 = y2 * (a2new - a2);
    const double* row2 = cache_.row(i2);
    for (int i = 0; i < n_; ++i) expansion_[i] += d1 * row1[i] + d2 * row2[i];
    alpha_[i1] = a1new;
    alpha_[i2] = a2new;
    return true;
  }

  bool attempt(int i1, int i2) {
    if (take_step(i1, i2)) {
      stall_ = 0;
      ++updates_;
      return true;
    }
    ++stall_;
    return false;
  }

  // Partner heuristics for a violating point: largest error gap among
  // margin vectors, then a seeded sweep over margin vectors, then over all.
  bool try_partners(int i2) {
    const double e2 = err(i2);
    int best = -1;
    double best_gap = -1.0;
    for (int i = 0; i < n_; ++i) {
      if (i == i2 || !is_margin(i)) continue;
      const double gap = std::abs(err(i) - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best >= 0 && attempt(best, i2)) return true;

    const int start1 = static_cast<int>(rng_.below(n_));
    for (int off = 0; off < n_; ++off) {
      const int i = (start1 + off) % n_;
      if (i == i2 || i == best || !is_margin(i)) continue;
      if (attempt(i, i2)) return true;
    }
    const int start2 = static_cast<int>(rng_.below(n_));
    for (int off = 0; off < n_; ++off) {
      const int i = (start2 + off) % n_;
      if (i == i2 || is_margin(i)) continue;
      if (attempt(i, i2)) return true;
    }
    return false;
  }

  [[noreturn]] void give_up(double viol) const {
    throw ConvergenceError(extract(compute_bias()), viol);
  }

  SvmModel extract(double bias) const {
    SvmModel model;
    model.kernel = cfg_.kernel;
    model.C = cfg_.C;
    model.bias = bias;
    for (int i = 0; i < n_; ++i) {
      if (alpha_[i] <= zero_thresh_) continue;
      model.support_vectors.push_back(data_[i].x);
      model.sv_labels.push_back(y(i));
      model.alphas.push_back(std::min(alpha_[i], cfg_.C));
      model.sv_indices.push_back(i);
    }
    if (model.support_vectors.empty()) {
      throw Error("SMO produced no support vectors");
    }
    return model;
  }

  std::span<const LabeledPoint> data_;
  TrainConfig cfg_;
  int n_;
  double zero_thresh_;
  mutable KernelCache cache_;
  Rng rng_;
  std::vector<double> alpha_;
  std::vector<double> expansion_;  // sum_j alpha_j y_j K(x_j, x_i), no bias
  long long stall_ = 0;
  long long stall_budget_ = 0;
  long long updates_ = 0;
  long long update_belt_ = 0;
};

}  // namespace

SvmModel train_smo(std::span<const LabeledPoint> data, const TrainConfig& cfg,
                   std::uint64_t seed) {
  if (data.size() < 2) throw Error("train_smo requires at least 2 points");
  if (!(cfg.C > 0)) throw Error("train_smo requires C > 0");
  if (!(cfg.kernel.gamma > 0)) throw Error("train_smo requires gamma > 0");
  if (!(cfg.kkt_tol > 0)) throw Error("train_smo requires kkt_tol > 0");
  if (cfg.max_passes < 1) throw Error("train_smo requires max_passes >= 1");
  bool has_pos = false, has_neg = false;
  for (const LabeledPoint& p : data) {
    if (p.y == kAggressiveLabel) {
      has_pos = true;
    } else if (p.y == kModerateLabel) {
      has_neg = true;
    } else {
      throw Error("train_smo: label must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) throw Error("train_smo requires both classes");

  return SmoSolver(data, cfg, seed).solve();
}

double decision_value(const SvmModel& model, const FeaturePoint& x) {
  double sum = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    sum += model.alphas[i] * model.sv_labels[i] * rbf(model.support_vectors[i], x, model.kernel);
  }
  return sum;
}

int predict(const SvmModel& model, const FeaturePoint& x) {
  return decision_value(model, x) >= 0.0 ? kAggressiveLabel : kModerateLabel;
}

std::size_t sv_count(const SvmModel& model) { return model.support_vectors.size(); }

double dual_objective(const SvmModel& model) {
  const std::size_t m = model.support_vectors.size();
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    linear += model.alphas[i];
    for (std::size_t j = 0; j < m; ++j) {
      quad += model.alphas[i] * model.alphas[j] * model.sv_labels[i] * model.sv_labels[j] *
              rbf(model.support_vectors[i], model.support_vectors[j], model.kernel);
    }
  }
  return linear - 0.5 * quad;
}

double max_kkt_violation(const SvmModel& model, std::span<const LabeledPoint> data) {
  if (model.sv_indices.size() != model.alphas.size()) {
    throw Error("max_kkt_violation needs a model with training indices");
  }
  std::vector<double> alpha(data.size(), 0.0);
  for (std::size_t p = 0; p < model.sv_indices.size(); ++p) {
    const int idx = model.sv_indices[p];
    if (idx < 0 || idx >= static_cast<int>(data.size())) {
      throw Error("max_kkt_violation: model indices do not match the data");
    }
    alpha[idx] = model.alphas[p];
  }
  const double zero_thresh = 1e-8 * model.C;
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double margin = data[i].y * decision_value(model, data[i].x) - 1.0;
    double v;
    if (alpha[i] <= zero_thresh) {
      v = std::max(0.0, -margin);
    } else if (alpha[i] >= model.C - zero_thresh) {
      v = std::max(0.0, margin);
    } else {
      v = std::abs(margin);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

constexpr const char* kModelMagic = "kmcsvm-model v";
constexpr int kModelVersion = 1;

double parse_field(std::string_view text, const std::string& name, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(name + ": malformed number at line " + std::to_string(line_no));
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

void write_model(const SvmModel& model, std::ostream& out) {
  out << kModelMagic << kModelVersion << '\n';
  out << "gamma " << format_double(model.kernel.gamma) << '\n';
  out << "C " << format_double(model.C) << '\n';
  out << "bias " << format_double(model.bias) << '\n';
  out << "sv " << model.support_vectors.size() << '\n';
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    out << format_double(model.support_vectors[i].speed) << ' '
        << format_double(model.support_vectors[i].throttle) << ' ' << model.sv_labels[i] << ' '
        << format_double(model.alphas[i]) << '\n';
  }
}

void save_model(const SvmModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_model(model, out);
  out.flush();
  if (!out) throw Error("write failed for '" + path + "'");
}

SvmModel read_model(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty model file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind(kModelMagic, 0) != 0) {
    throw ParseError(name + ": not a kmcsvm model file");
  }
  const int version = static_cast<int>(parse_field(line.substr(std::string(kModelMagic).size()),
                                                   name, 1));
  if (version > kModelVersion) {
    throw Error(name + ": model format version " + std::to_string(version) +
                " is newer than supported version " + std::to_string(kModelVersion));
  }

  SvmModel model;
  std::size_t line_no = 1;
  long expected_svs = -1;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError(name + ": truncated model file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
  };

  next_line();
  auto fields = split_ws(line);
  if (fields.size() != 2 || fields[0] != "gamma") throw ParseError(name + ": expected gamma line");
  model.kernel.gamma = parse_field(fields[1], name, line_no);

  next_line();
  fields = split_ws(line);
  if (fields.size() != 2 || fields[0] != "C") throw ParseError(name + ": expected C line");
  model.C = parse_field(fields[1], name, line_no);

  next_line();
  fields = split_ws(line);
  if (fields.size() != 2 || fields[0] != "bias") throw ParseError(name + ": expected bias line");
  model.bias = parse_field(fields[1], name, line_no);

  next_line();
  fields = split_ws(line);
  if (fields.size() != 2 || fields[0] != "sv") throw ParseError(name + ": expected sv line");
  expected_svs = static_cast<long>(parse_field(fields[1], name, line_no));
  if (expected_svs < 1) throw ParseError(name + ": model must have at least one support vector");

  for (long i = 0; i < expected_svs; ++i) {
    next_line();
    fields = split_ws(line);
    if (fields.size() != 4) {
      throw ParseError(name + ": expected 4 fields at line " + std::to_string(line_no));
    }
    FeaturePoint p{parse_field(fields[0], name, line_no), parse_field(fields[1], name, line_no)};
    const double label = parse_field(fields[2], name, line_no);
    const double alpha = parse_field(fields[3], name, line_no);
    if (label != 1.0 && label != -1.0) {
      throw ParseError(name + ": label outside {+1,-1} at line " + std::to_string(line_no));
    }
    if (!(alpha > 0.0 && alpha <= model.C)) {
      throw ParseError(name + ": alpha outside (0, C] at line " + std::to_string(line_no));
    }
    model.support_vectors.push_back(p);
    model.sv_labels.push_back(label > 0 ? kAggressiveLabel : kModerateLabel);
    model.alphas.push_back(alpha);
  }
  if (!(model.kernel.gamma > 0) || !(model.C > 0)) {
    throw ParseError(name + ": gamma and C must be positive");
  }
  return model;
}

SvmModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return read_model(in, path);
}

}  // namespace kmcsvm
