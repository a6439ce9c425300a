#include "rgbt/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "rgbt/errors.hpp"
#include "rgbt/fusion.hpp"
#include "rgbt/ops.hpp"

namespace rgbt {

namespace {

// Fixed stream for the output cotangents, so a check on given inputs is
// reproducible.
constexpr std::uint64_t kCotangentSeed = 0x5DEECE66Dull;

std::vector<Tensor> random_cotangents(std::span<const Tensor> outputs) {
  Rng rng(kCotangentSeed);
  std::vector<Tensor> cots;
  cots.reserve(outputs.size());
  for (const Tensor& o : outputs) cots.push_back(Tensor::uniform(o.shape(), rng, -1.0, 1.0));
  return cots;
}

double project(std::span<const Tensor> outputs, std::span<const Tensor> cots) {
  double s = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    for (std::int64_t j = 0; j < outputs[i].size(); ++j) s += outputs[i][j] * cots[i][j];
  }
  return s;
}

void register_builtin_ops(OpRegistry& reg);

}  // namespace

OpRegistry& OpRegistry::instance() {
  static OpRegistry* reg = [] {
    auto* r = new OpRegistry();
    register_builtin_ops(*r);
    return r;
  }();
  return *reg;
}

void OpRegistry::add(const std::string& name, CheckedOp op) { ops_[name] = std::move(op); }

bool OpRegistry::contains(const std::string& name) const { return ops_.count(name) != 0; }

const CheckedOp& OpRegistry::get(const std::string& name) const {
  auto it = ops_.find(name);
  if (it == ops_.end()) throw LookupError("no registered op named '" + name + "'");
  return it->second;
}

std::vector<std::string> OpRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(ops_.size());
  for (const auto& [k, v] : ops_) out.push_back(k);
  return out;
}

bool GradCheckReport::passed() const {
  return std::all_of(inputs.begin(), inputs.end(), [](const InputCheck& c) { return c.pass; });
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const InputCheck& c : inputs) w = std::max(w, c.max_rel_error);
  return w;
}

GradRecord analytic_gradients(const std::string& op_name, std::span<const Tensor> inputs) {
  const CheckedOp& op = OpRegistry::instance().get(op_name);
  const std::vector<Tensor> outputs = op.forward(inputs);
  const std::vector<Tensor> cots = random_cotangents(outputs);
  const std::vector<Tensor> grads = op.vjp(inputs, cots);
  GradRecord rec;
  rec.value = Tensor({1}, {project(outputs, cots)});
  for (std::size_t i = 0; i < grads.size(); ++i) rec.partials[op.input_names[i]] = grads[i];
  return rec;
}

GradCheckReport grad_check(const std::string& op_name, std::span<const Tensor> inputs,
                           double epsilon, double tolerance) {
  if (!(epsilon > 0.0)) throw ValueError("grad_check: epsilon must be positive");
  const CheckedOp& op = OpRegistry::instance().get(op_name);
  if (inputs.size() != op.input_names.size()) {
    throw ShapeError("grad_check: op '" + op_name + "' expects " +
                     std::to_string(op.input_names.size()) + " inputs, got " +
                     std::to_string(inputs.size()));
  }

  const std::vector<Tensor> outputs = op.forward(inputs);
  const std::vector<Tensor> cots = random_cotangents(outputs);
  const std::vector<Tensor> analytic = op.vjp(inputs, cots);

  std::vector<Tensor> work(inputs.begin(), inputs.end());
  GradCheckReport report;
  report.op = op_name;
  report.epsilon = epsilon;
  report.tolerance = tolerance;

  for (std::size_t k = 0; k < work.size(); ++k) {
    InputCheck check;
    check.input = op.input_names[k];
    for (std::int64_t i = 0; i < work[k].size(); ++i) {
      const double original = work[k][i];
      work[k][i] = original + epsilon;
      const double plus = project(op.forward(work), cots);
      work[k][i] = original - epsilon;
      const double minus = project(op.forward(work), cots);
      work[k][i] = original;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double a = analytic[k][i];
      const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      check.max_rel_error = std::max(check.max_rel_error, rel);
    }
    check.pass = check.max_rel_error < tolerance;
    report.inputs.push_back(std::move(check));
  }
  return report;
}

std::vector<GradCheckReport> grad_check_all(std::uint64_t seed, double epsilon, double tolerance) {
  OpRegistry& reg = OpRegistry::instance();
  std::vector<GradCheckReport> reports;
  for (const std::string& name : reg.names()) {
    Rng rng(seed ^ std::hash<std::string>{}(name));
    const std::vector<Tensor> inputs = reg.get(name).sample_inputs(rng);
    reports.push_back(grad_check(name, inputs, epsilon, tolerance));
  }
  return reports;
}

namespace {

void register_builtin_ops(OpRegistry& reg) {
  reg.add("matmul",
          {{"a", "b"},
           [](std::span<const Tensor> in) { return std::vector<Tensor>{matmul(in[0], in[1])}; },
           [](std::span<const Tensor> in, std::span<const Tensor> cots) {
             Tensor ga, gb;
             matmul_backward(in[0], in[1], cots[0], ga, gb);
             return std::vector<Tensor>{ga, gb};
           },
           [](Rng& rng) {
             const int m = rng.uniform_int(1, 4), k = rng.uniform_int(1, 4),
                       n = rng.uniform_int(1, 4);
             return std::vector<Tensor>{Tensor::uniform({m, k}, rng, -2, 2),
                                        Tensor::uniform({k, n}, rng, -2, 2)};
           }});

  reg.add("gap",
          {{"x"},
           [](std::span<const Tensor> in) { return std::vector<Tensor>{gap(in[0])}; },
           [](std::span<const Tensor> in, std::span<const Tensor> cots) {
             return std::vector<Tensor>{gap_backward(in[0], cots[0])};
           },
           [](Rng& rng) {
             const int c = rng.uniform_int(1, 4), h = rng.uniform_int(1, 4),
                       w = rng.uniform_int(1, 4);
             return std::vector<Tensor>{Tensor::uniform({c, h, w}, rng, -2, 2)};
           }});

  reg.add("fully_connected",
          {{"x", "weight", "bias"},
           [](std::span<const Tensor> in) {
             return std::vector<Tensor>{fully_connected(in[0], in[1], in[2])};
           },
           [](std::span<const Tensor> in, std::span<const Tensor> cots) {
             Tensor gx, gw, gb;
             fully_connected_backward(in[0], in[1], cots[0], gx, gw, gb);
             return std::vector<Tensor>{gx, gw, gb};
           },
           [](Rng& rng) {
             const int in_n = rng.uniform_int(1, 4), out_n = rng.uniform_int(1, 4);
             return std::vector<Tensor>{Tensor::uniform({in_n}, rng, -2, 2),
                                        Tensor::uniform({out_n, in_n}, rng, -2, 2),
                                        Tensor::uniform({out_n}, rng, -2, 2)};
           }});

  reg.add("conv1x1",
          {{"x", "weight", "bias"},
           [](std::span<const Tensor> in) {
             return std::vector<Tensor>{conv1x1(in[0], in[1], in[2])};
           },
           [](std::span<const Tensor> in, std::span<const Tensor> cots) {
             Tensor gx, gw, gb;
             conv1x1_backward(in[0], in[1], cots[0], gx, gw, gb);
             return std::vector<Tensor>{gx, gw, gb};
           },
           [](Rng& rng) {
             const int c = rng.uniform_int(1, 4), co = rng.uniform_int(1, 4),
                       h = rng.uniform_int(1, 3), w = rng.uniform_int(1, 3);
             return std::vector<Tensor>{Tensor::uniform({c, h, w}, rng, -2, 2),
                                        Tensor::uniform({co, c}, rng, -2, 2),
                                        Tensor::uniform({co}, rng, -2, 2)};
           }});

  reg.add("softmax_pair",
          {{"a", "b"},
           [](std::span<const Tensor> in) {
             auto [wa, wb] = softmax_pair(in[0], in[1]);
             return std::vector<Tensor>{wa, wb};
           },
           [](std::span<const Tensor> in, std::span<const Tensor> cots) {
             auto [wa, wb] = softmax_pair(in[0], in[1]);
             Tensor ga, gb;
             softmax_pair_backward(wa, wb, cots[0], cots[1], ga, gb);
             return std::vector<Tensor>{ga, gb};
           },
           [](Rng& rng) {
             const int n = rng.uniform_int(1, 8);
             return std::vector<Tensor>{Tensor::uniform({n}, rng, -2, 2),
                                        Tensor::uniform({n}, rng, -2, 2)};
           }});

  reg.add("relu",
          {{"x"},
           [](std::span<const Tensor> in) { return std::vector<Tensor>{relu(in[0])}; },
           [](std::span<const Tensor> in, std::span<const Tensor> cots) {
             return std::vector<Tensor>{relu_backward(in[0], cots[0])};
           },
           [](Rng& rng) {
             const int n = rng.uniform_int(2, 8);
             // Keep samples away from the kink at zero.
             Tensor t = Tensor::uniform({n}, rng, -2, 2);
             for (std::int64_t i = 0; i < t.size(); ++i) {
               if (std::abs(t[i]) < 1e-2) t[i] = t[i] < 0 ? t[i] - 0.5 : t[i] + 0.5;
             }
             return std::vector<Tensor>{t};
           }});

  reg.add("cif_divergence",
          {{"p_v0", "p_v1", "p_t0", "p_t1"},
           [](std::span<const Tensor> in) {
             const Tensor pv[] = {in[0], in[1]};
             const Tensor pt[] = {in[2], in[3]};
             return std::vector<Tensor>{Tensor({1}, {cif_divergence_loss(pv, pt)})};
           },
           [](std::span<const Tensor> in, std::span<const Tensor> cots) {
             const Tensor pv[] = {in[0], in[1]};
             const Tensor pt[] = {in[2], in[3]};
             std::vector<Tensor> gv, gt;
             cif_divergence_backward(pv, pt, cots[0][0], gv, gt);
             return std::vector<Tensor>{gv[0], gv[1], gt[0], gt[1]};
           },
           [](Rng& rng) {
             const int c = rng.uniform_int(1, 3), h = rng.uniform_int(1, 3),
                       w = rng.uniform_int(1, 3);
             return std::vector<Tensor>{
                 Tensor::uniform({c, h, w}, rng, -2, 2), Tensor::uniform({c, h, w}, rng, -2, 2),
                 Tensor::uniform({c, h, w}, rng, -2, 2), Tensor::uniform({c, h, w}, rng, -2, 2)};
           }});

  reg.add(
      "dff_fuse",
      {{"feat_v", "feat_t", "w_global", "b_global", "w_visible", "b_visible", "w_thermal",
        "b_thermal"},
       [](std::span<const Tensor> in) {
         DffParams p{in[2], in[3], in[4], in[5], in[6], in[7]};
         DffResult r = dff_fuse(in[0], in[1], p);
         return std::vector<Tensor>{r.fused, r.weight_visible, r.weight_thermal};
       },
       [](std::span<const Tensor> in, std::span<const Tensor> cots) {
         DffParams p{in[2], in[3], in[4], in[5], in[6], in[7]};
         DffGrads g = dff_fuse_backward(in[0], in[1], p, cots[0], cots[1], cots[2]);
         return std::vector<Tensor>{g.feat_visible,       g.feat_thermal,
                                    g.params.w_global,    g.params.b_global,
                                    g.params.w_visible,   g.params.b_visible,
                                    g.params.w_thermal,   g.params.b_thermal};
       },
       [](Rng& rng) {
         const int c = rng.uniform_int(1, 4), h = rng.uniform_int(1, 3),
                   w = rng.uniform_int(1, 3), e = rng.uniform_int(1, 4);
         return std::vector<Tensor>{
             Tensor::uniform({c, h, w}, rng, -2, 2), Tensor::uniform({c, h, w}, rng, -2, 2),
             Tensor::uniform({e, c}, rng, -1, 1),    Tensor::uniform({e}, rng, -1, 1),
             Tensor::uniform({c, e}, rng, -1, 1),    Tensor::uniform({c}, rng, -1, 1),
             Tensor::uniform({c, e}, rng, -1, 1),    Tensor::uniform({c}, rng, -1, 1)};
       }});

  reg.add("mam_confidence",
          {{"x", "w_phi", "b_phi", "w_psi", "b_psi"},
           [](std::span<const Tensor> in) {
             MamParams p{in[1], in[2], in[3], in[4]};
             return std::vector<Tensor>{mam_confidence(in[0], p)};
           },
           [](std::span<const Tensor> in, std::span<const Tensor> cots) {
             MamParams p{in[1], in[2], in[3], in[4]};
             MamGrads g = mam_confidence_backward(in[0], p, cots[0]);
             return std::vector<Tensor>{g.x, g.params.w_phi, g.params.b_phi, g.params.w_psi,
                                        g.params.b_psi};
           },
           [](Rng& rng) {
             const int c = rng.uniform_int(1, 4), h = rng.uniform_int(1, 3),
                       w = rng.uniform_int(1, 3), inner = rng.uniform_int(1, 3);
             return std::vector<Tensor>{
                 Tensor::uniform({c, h, w}, rng, -1, 1), Tensor::uniform({inner, c}, rng, -1, 1),
                 Tensor::uniform({inner}, rng, -1, 1), Tensor::uniform({inner, c}, rng, -1, 1),
                 Tensor::uniform({inner}, rng, -1, 1)};
           }});

  reg.add(
      "adf_fuse",
      {{"resp_d", "resp_c", "conf_d", "conf_c", "w_encoder", "b_encoder", "w_decoder",
        "b_decoder"},
       [](std::span<const Tensor> in) {
         AdfParams p{in[4], in[5], in[6], in[7]};
         AdfResult r = adf_fuse(in[0], in[1], in[2], in[3], p);
         return std::vector<Tensor>{r.response, r.weight_disc, r.weight_comp};
       },
       [](std::span<const Tensor> in, std::span<const Tensor> cots) {
         AdfParams p{in[4], in[5], in[6], in[7]};
         AdfGrads g = adf_fuse_backward(in[0], in[1], in[2], in[3], p, cots[0], cots[1], cots[2]);
         return std::vector<Tensor>{g.resp_disc,         g.resp_comp,         g.conf_disc,
                                    g.conf_comp,         g.params.w_encoder,  g.params.b_encoder,
                                    g.params.w_decoder,  g.params.b_decoder};
       },
       [](Rng& rng) {
         const int h = rng.uniform_int(1, 4), w = rng.uniform_int(1, 4);
         // Bias dominates w * conf below, keeping pre-activations clear of the
         // ReLU kink so the finite-difference stencil stays one-sided.
         Tensor we = Tensor::uniform({4, 2}, rng, -1, 1);
         Tensor be = Tensor::uniform({4}, rng, 1.0, 2.0);
         return std::vector<Tensor>{
             Tensor::uniform({h, w}, rng, -2, 2), Tensor::uniform({h, w}, rng, -2, 2),
             Tensor::uniform({h, w}, rng, 0.05, 0.4), Tensor::uniform({h, w}, rng, 0.05, 0.4),
             we, be, Tensor::uniform({2, 4}, rng, -1, 1), Tensor::uniform({2}, rng, -1, 1)};
       }});
}

}  // namespace

}  // namespace rgbt
