#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rgbt/rng.hpp"
#include "rgbt/tensor.hpp"

namespace rgbt {

/// Value of an operation together with the partial derivative of a scalar
/// projection of its outputs with respect to each named input.
struct GradRecord {
  Tensor value;                            // the scalar projection, shape {1}
  std::map<std::string, Tensor> partials;  // keyed by input name, shaped like the input
};

/// A differentiable operation as seen by the checker: a forward map from a
/// fixed list of named input tensors to output tensors, the matching
/// vector-Jacobian product, and a sampler producing well-shaped random inputs.
struct CheckedOp {
  std::vector<std::string> input_names;
  std::function<std::vector<Tensor>(std::span<const Tensor>)> forward;
  std::function<std::vector<Tensor>(std::span<const Tensor>, std::span<const Tensor>)> vjp;
  std::function<std::vector<Tensor>(Rng&)> sample_inputs;
};

class OpRegistry {
 public:
  /// Registry with every built-in primitive and fusion op registered.
  static OpRegistry& instance();

  void add(const std::string& name, CheckedOp op);
  bool contains(const std::string& name) const;
  const CheckedOp& get(const std::string& name) const;  // throws LookupError
  std::vector<std::string> names() const;               // sorted

 private:
  std::map<std::string, CheckedOp> ops_;
};

struct InputCheck {
  std::string input;
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::string op;
  double epsilon = 0.0;
  double tolerance = 0.0;
  std::vector<InputCheck> inputs;
  bool passed() const;
  double worst() const;
};

/// Compares the registered analytic backward of `op` against central finite
/// differences of a fixed random scalar projection of its outputs. The
/// relative error per element is |a - n| / max(1, |a|, |n|); each input is
/// reported with the maximum over its elements.
GradCheckReport grad_check(const std::string& op, std::span<const Tensor> inputs, double epsilon,
                           double tolerance);

/// Analytic side of grad_check, exposed for reuse in tests.
GradRecord analytic_gradients(const std::string& op, std::span<const Tensor> inputs);

/// Runs grad_check over every registered op with sampled inputs.
std::vector<GradCheckReport> grad_check_all(std::uint64_t seed, double epsilon, double tolerance);

}  // namespace rgbt
