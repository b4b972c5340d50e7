#include "cduap/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "cduap/errors.hpp"

namespace cduap {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw DimensionError("tensor shape " + shape_string(shape_) + " does not hold " +
                         std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> indices) const {
  const std::size_t c = cols();
  Tensor out({indices.size(), c});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value in ") + what);
}

}  // namespace cduap
