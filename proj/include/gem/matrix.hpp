#pragma once

#include <span>
#include <vector>

namespace gem {

// A model's parameters or a gradient, flattened into one contiguous vector.
using FlatVector = std::vector<double>;

/// Dense row-major matrix of doubles; the single numeric carrier for
/// activations, weights and images.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::vector<double> data);

  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const {
    return data_.data() + static_cast<std::size_t>(r) * cols_;
  }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aT * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * bT
Matrix transpose(const Matrix& a);

Matrix relu(const Matrix& a);
// Masks upstream where the forward input was <= 0.
Matrix relu_backward(const Matrix& a, const Matrix& upstream);

Matrix softmax(const Matrix& logits);

struct SoftmaxXent {
  double loss;     // mean cross-entropy over rows
  Matrix dlogits;  // (softmax - onehot) / batch
};
SoftmaxXent softmax_xent(const Matrix& logits, std::span<const int> labels);

// Flat-vector helpers.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);  // y += alpha*x

}  // namespace gem
