#ifndef SCML_TENSOR_HPP
#define SCML_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace scml {

/// Thrown when operand shapes are incompatible. The message names the op and both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an op is evaluated outside its numeric domain (log of a non-positive value,
/// normalization of a zero row, non-positive temperature, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

/// Dense row-major double tensor of rank 0, 1 or 2.
class Tensor {
 public:
  Tensor() : shape_{}, data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 0 ? 1 : shape_.back(); }
  bool is_scalar() const { return data_.size() == 1 && rank() <= 1; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return data().subspan(r * cols(), cols()); }
  std::span<double> row(std::size_t r) { return data().subspan(r * cols(), cols()); }

  double item() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace scml

#endif  // SCML_TENSOR_HPP
