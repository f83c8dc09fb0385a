#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kmcsvm/types.hpp"

namespace kmcsvm {

struct KernelParams {
  double gamma = 1.0;  // > 0, units 1/(feature distance)^2
};

/// Gaussian kernel exp(-gamma * ||a - b||^2). Symmetric, range (0, 1].
double rbf(const FeaturePoint& a, const FeaturePoint& b, const KernelParams& kp);

struct TrainConfig {
  double C = 1.0;          // box constraint, > 0
  KernelParams kernel;
  double kkt_tol = 1e-3;   // admissible KKT violation at convergence
  int max_passes = 100;    // budget: max_passes * n pair examinations
                           // without progress before giving up
};

/// Trained soft-margin model. Only points with alpha > 1e-8*C are
/// retained. `sv_indices` maps each stored vector back to its position in
/// the training data; it is empty for deserialized models and is not part
/// of the file format.
struct SvmModel {
  std::vector<FeaturePoint> support_vectors;
  std::vector<int> sv_labels;      // +1 / -1 per support vector
  std::vector<double> alphas;      // dual coefficient per support vector
  double bias = 0.0;
  KernelParams kernel;
  double C = 0.0;
  std::vector<int> sv_indices;
};

/// Raised when the solver exhausts its update budget; carries the
/// best-so-far model and the residual violation so callers can decide
/// whether to keep it.
struct ConvergenceError : Error {
  ConvergenceError(SvmModel best, double violation);
  SvmModel best_model;
  double max_kkt_violation;
};

/// SMO solver for the kernelized soft-margin dual. Working pairs are
/// picked by maximal KKT violation with a seeded random sweep as
/// fallback, so results are deterministic per seed. Requires both classes
/// and |data| >= 2.
SvmModel train_smo(std::span<const LabeledPoint> data, const TrainConfig& cfg,
                   std::uint64_t seed);

/// g(x) = sum_i alpha_i y_i K(sv_i, x) + bias.
double decision_value(const SvmModel& model, const FeaturePoint& x);

/// sign(decision_value); an exact zero maps to +1.
int predict(const SvmModel& model, const FeaturePoint& x);

std::size_t sv_count(const SvmModel& model);

/// Dual objective value of the model's coefficients.
double dual_objective(const SvmModel& model);

/// Largest KKT violation of `model` over `data`. Points absent from the
/// model are treated as alpha = 0; stored vectors are matched through
/// sv_indices, which must be present.
double max_kkt_violation(const SvmModel& model, std::span<const LabeledPoint> data);

// Model file format "kmcsvm-model v1": gamma, C, bias, one line per
// support vector (speed throttle label alpha), doubles at 17 significant
// digits so round-trips are exact. Reading a future version is an error.
void save_model(const SvmModel& model, const std::string& path);
void write_model(const SvmModel& model, std::ostream& out);
SvmModel load_model(const std::string& path);
SvmModel read_model(std::istream& in, const std::string& name);

}  // namespace kmcsvm
