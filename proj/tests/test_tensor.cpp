#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "rgbt/errors.hpp"
#include "rgbt/grad_check.hpp"
#include "rgbt/ops.hpp"
#include "rgbt/rng.hpp"
#include "rgbt/tensor.hpp"

using namespace rgbt;

TEST_CASE("tensor construction enforces shape invariants") {
  CHECK_THROWS_AS(Tensor({2, 0}), ValueError);
  CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), ShapeError);
  const Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.shape_string() == "2x3");
}

TEST_CASE("matmul identity and hand examples") {
  const Tensor b = Tensor::matrix(2, 2, {3, 4, 5, 6});
  CHECK(matmul(Tensor::identity(2), b) == b);
  CHECK(matmul(b, Tensor::identity(2)) == b);

  const Tensor row = Tensor::matrix(1, 2, {1, 2});
  const Tensor col = Tensor::matrix(2, 1, {3, 4});
  const Tensor prod = matmul(row, col);
  CHECK(prod.size() == 1);
  CHECK(prod[0] == 11.0);

  CHECK(matmul(Tensor::zeros({2, 3}), Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6})) ==
        Tensor::zeros({2, 2}));
}

TEST_CASE("matmul identity is bitwise for exact values") {
  Rng rng(3);
  const Tensor x = Tensor::uniform({4, 4}, rng, -5, 5);
  const Tensor i4 = Tensor::identity(4);
  CHECK(matmul(i4, x) == x);
  CHECK(matmul(x, i4) == x);
}

TEST_CASE("matmul rejects mismatched shapes with both named") {
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x2") != std::string::npos);
  }
}

TEST_CASE("gap: constant, enumeration and degenerate pooling") {
  CHECK(gap(Tensor::full({3, 4, 5}, 5.0)) == Tensor::full({3}, 5.0));

  const Tensor x({1, 2, 2}, {1, 2, 3, 4});
  CHECK(gap(x)(0) == doctest::Approx(2.5).epsilon(1e-15));

  const Tensor single({4, 1, 1}, {7, -1, 0.5, 2});
  CHECK(gap(single) == Tensor::vector({7, -1, 0.5, 2}));

  CHECK_THROWS_AS(gap(Tensor::zeros({2, 2})), ShapeError);
}

TEST_CASE("gap is linear") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = Tensor::uniform({3, 4, 2}, rng, -2, 2);
    const Tensor y = Tensor::uniform({3, 4, 2}, rng, -2, 2);
    const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
    const Tensor lhs = gap(add(scale(x, a), scale(y, b)));
    const Tensor rhs = add(scale(gap(x), a), scale(gap(y), b));
    for (int c = 0; c < 3; ++c) CHECK(lhs(c) == doctest::Approx(rhs(c)).epsilon(1e-12));
  }
}

TEST_CASE("fully_connected examples") {
  const Tensor x = Tensor::vector({2, 3});
  CHECK(fully_connected(x, Tensor::identity(2), Tensor::zeros({2})) == x);
  const Tensor y = fully_connected(x, Tensor::matrix(1, 2, {1, 1}), Tensor::vector({1}));
  CHECK(y(0) == 6.0);
  CHECK(fully_connected(Tensor::zeros({2}), Tensor::matrix(2, 2, {1, 2, 3, 4}),
                        Tensor::vector({5, 6})) == Tensor::vector({5, 6}));
  CHECK_THROWS_AS(fully_connected(x, Tensor::matrix(1, 3, {1, 1, 1}), Tensor::vector({0})),
                  ShapeError);
}

TEST_CASE("conv1x1 examples") {
  Rng rng(5);
  const Tensor x = Tensor::uniform({2, 3, 3}, rng, -1, 1);
  CHECK(conv1x1(x, Tensor::identity(2), Tensor::zeros({2})) == x);

  Tensor two({2, 1, 1});
  two(0, 0, 0) = 2.0;
  two(1, 0, 0) = 3.0;
  const Tensor summed = conv1x1(two, Tensor::matrix(1, 2, {1, 1}), Tensor::zeros({1}));
  CHECK(summed(0, 0, 0) == 5.0);

  const Tensor bias_only = conv1x1(x, Tensor::zeros({3, 2}), Tensor::vector({1, 2, -1}));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(bias_only(0, i, j) == 1.0);
      CHECK(bias_only(2, i, j) == -1.0);
    }
}

TEST_CASE("softmax_pair: symmetry, logistic value and saturation") {
  const Tensor a = Tensor::vector({0.3, -2, 7});
  auto [wa, wb] = softmax_pair(a, a);
  for (int i = 0; i < 3; ++i) {
    CHECK(wa(i) == 0.5);
    CHECK(wb(i) == 0.5);
  }

  auto [pa, pb] = softmax_pair(Tensor::vector({std::log(3.0)}), Tensor::vector({0.0}));
  CHECK(pa(0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(pb(0) == doctest::Approx(0.25).epsilon(1e-14));

  auto [sa, sb] = softmax_pair(Tensor::vector({1000.0}), Tensor::vector({0.0}));
  CHECK(std::isfinite(sa(0)));
  CHECK(std::isfinite(sb(0)));
  CHECK(sa(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sb(0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("softmax_pair outputs stay normalized, huge gaps included") {
  // For moderate gaps both outputs are strictly inside (0,1). Once the gap
  // exceeds ~37 the larger side rounds to exactly 1.0 in doubles; the smaller
  // side stays strictly positive up to gaps past 700, and the pair always
  // sums to one.
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.uniform_int(1, 8);
    Tensor a = Tensor::uniform({n}, rng, -3, 3);
    Tensor b = Tensor::uniform({n}, rng, -3, 3);
    auto [wa, wb] = softmax_pair(a, b);
    for (int i = 0; i < n; ++i) {
      CHECK(wa(i) > 0.0);
      CHECK(wa(i) < 1.0);
      CHECK(wb(i) > 0.0);
      CHECK(wb(i) < 1.0);
      CHECK(wa(i) + wb(i) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  auto [ha, hb] = softmax_pair(Tensor::vector({705.0}), Tensor::vector({0.0}));
  CHECK(hb(0) > 0.0);  // beyond the naive exp overflow point, still positive
  CHECK(ha(0) <= 1.0);
  CHECK(std::isfinite(ha(0)));
  CHECK(ha(0) + hb(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grad_check: linear op matches finite differences to machine noise") {
  Rng rng(23);
  const Tensor inputs[] = {Tensor::uniform({3}, rng, -1, 1), Tensor::uniform({2, 3}, rng, -1, 1),
                           Tensor::uniform({2}, rng, -1, 1)};
  const GradCheckReport report = grad_check("fully_connected", inputs, 1e-5, 1e-9);
  CHECK(report.passed());
  CHECK(report.worst() < 1e-9);
}

TEST_CASE("grad_check: softmax_pair on a random 8-vector") {
  Rng rng(29);
  const Tensor inputs[] = {Tensor::uniform({8}, rng, -2, 2), Tensor::uniform({8}, rng, -2, 2)};
  const GradCheckReport report = grad_check("softmax_pair", inputs, 1e-5, 1e-6);
  CHECK(report.passed());
}

TEST_CASE("grad_check rejects bad epsilon and unknown ops") {
  Rng rng(31);
  const Tensor inputs[] = {Tensor::uniform({2}, rng, -1, 1), Tensor::uniform({2}, rng, -1, 1)};
  CHECK_THROWS_AS(grad_check("softmax_pair", inputs, 0.0, 1e-6), ValueError);
  CHECK_THROWS_AS(grad_check("softmax_pair", inputs, -1e-5, 1e-6), ValueError);
  CHECK_THROWS_AS(grad_check("no_such_op", inputs, 1e-5, 1e-6), LookupError);
}

TEST_CASE("every registered op passes grad_check at 1e-6") {
  const auto reports = grad_check_all(1234, 1e-5, 1e-6);
  CHECK(reports.size() >= 10);
  for (const auto& r : reports) {
    INFO(r.op);
    CHECK(r.passed());
  }
}

TEST_CASE("analytic_gradients returns partials shaped like each input") {
  Rng rng(37);
  const Tensor inputs[] = {Tensor::uniform({3}, rng, -1, 1), Tensor::uniform({4, 3}, rng, -1, 1),
                           Tensor::uniform({4}, rng, -1, 1)};
  const GradRecord rec = analytic_gradients("fully_connected", inputs);
  CHECK(rec.value.size() == 1);
  CHECK(rec.partials.at("x").shape() == inputs[0].shape());
  CHECK(rec.partials.at("weight").shape() == inputs[1].shape());
  CHECK(rec.partials.at("bias").shape() == inputs[2].shape());
}

TEST_CASE("tensor text form round-trips exactly") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor t = Tensor::uniform({rng.uniform_int(1, 4), rng.uniform_int(1, 5)}, rng,
                                     -1e3, 1e3);
    std::stringstream ss;
    t.write_text(ss);
    CHECK(Tensor::read_text(ss) == t);
  }
}

TEST_CASE("tensor text form rejects truncated payloads") {
  std::stringstream ss("2 2\n1.0 2.0 3.0\n");
  CHECK_THROWS_AS(Tensor::read_text(ss), ParseError);
}
