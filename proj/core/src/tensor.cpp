#include "rgbt/tensor.hpp"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "rgbt/errors.hpp"
#include "rgbt/rng.hpp"

namespace rgbt {

namespace {

std::int64_t checked_element_count(const std::vector<int>& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
  std::int64_t n = 1;
  for (int e : shape) {
    if (e <= 0) throw ValueError("tensor extents must be positive, got " + std::to_string(e));
    n *= e;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(checked_element_count(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  const std::int64_t n = checked_element_count(shape_);
  if (n != static_cast<std::int64_t>(data_.size())) {
    throw ShapeError("tensor shape " + shape_string() + " expects " + std::to_string(n) +
                     " values, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  for (double& v : t.data_) v = value;
  return t;
}

Tensor Tensor::vector(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::identity(int n) {
  Tensor t({n, n});
  for (int i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::uniform(std::vector<int> shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data_) v = rng.uniform(lo, hi);
  return t;
}

std::string Tensor::shape_string() const {
  std::string s;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s.empty() ? "scalar" : s;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::write_text(std::ostream& os, int precision) const {
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ' ';
    os << shape_[i];
  }
  os << '\n';
  os.precision(precision);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    os << data_[i] << ((i + 1) % 8 == 0 ? '\n' : ' ');
  }
  if (data_.size() % 8 != 0) os << '\n';
}

Tensor Tensor::read_text(std::istream& is) {
  std::string header;
  while (std::getline(is, header)) {
    if (header.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (header.empty()) throw ParseError("tensor text: missing shape line");
  std::istringstream hs(header);
  std::vector<int> shape;
  int e = 0;
  while (hs >> e) shape.push_back(e);
  const std::int64_t n = checked_element_count(shape);

  // Line-wise strtod is markedly faster than operator>> and leaves anything
  // after the payload (e.g. the next named tensor) unread.
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));
  std::string line;
  while (static_cast<std::int64_t>(values.size()) < n && std::getline(is, line)) {
    const char* p = line.c_str();
    char* end = nullptr;
    while (static_cast<std::int64_t>(values.size()) < n) {
      const double v = std::strtod(p, &end);
      if (end == p) break;
      values.push_back(v);
      p = end;
    }
  }
  if (static_cast<std::int64_t>(values.size()) != n) {
    throw ParseError("tensor text: expected " + std::to_string(n) + " values, got " +
                     std::to_string(values.size()));
  }
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace rgbt
