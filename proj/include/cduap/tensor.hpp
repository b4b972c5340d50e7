#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cduap {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major array of doubles. Rank 1 and 2 are all the library needs,
// but the shape is stored generically.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * shape_[1], shape_[1]);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(values_).subspan(r * shape_[1], shape_[1]);
  }

  // Gathers the given rows of a matrix into a new matrix.
  Tensor gather_rows(std::span<const std::size_t> indices) const;

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

// Throws NumericError naming `what` when any value is NaN or infinite.
void require_finite(const Tensor& t, const char* what);

}  // namespace cduap
