#ifndef DSQN_TENSOR_HPP
#define DSQN_TENSOR_HPP

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dsqn/common.hpp"

namespace dsqn {

// Dense row-major tensor of doubles. Small and value-semantic; all linear
// algebra in this project is explicit loops over these.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(checked_numel(shape_), fill) {}

  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    require(static_cast<std::size_t>(checked_numel(shape_)) == data_.size(),
            "Tensor: data size does not match shape");
  }

  static Tensor vector(std::vector<double> v) {
    const int n = static_cast<int>(v.size());
    return Tensor({n}, std::move(v));
  }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int numel() const { return static_cast<int>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(double x) { data_.assign(data_.size(), x); }

  static std::string shape_string(std::span<const int> shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + ")";
  }

 private:
  static int checked_numel(const std::vector<int>& shape) {
    long long n = 1;
    for (int d : shape) {
      require(d > 0, "Tensor: shape dimensions must be positive");
      n *= d;
    }
    require(n <= (1LL << 31), "Tensor: too large");
    return static_cast<int>(n);
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

inline int numel_of(std::span<const int> shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

}  // namespace dsqn

#endif  // DSQN_TENSOR_HPP
