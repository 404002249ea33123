#include "gem/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#ifdef GEM_USE_CBLAS
#include <cblas.h>
#endif

namespace gem {

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("Matrix: negative dimensions");
  }
}

Matrix::Matrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                " != " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

namespace {

#ifndef GEM_USE_CBLAS
void gemm_naive(bool trans_a, bool trans_b, const Matrix& a, const Matrix& b, Matrix& c) {
  const int m = c.rows(), n = c.cols();
  const int k = trans_a ? a.rows() : a.cols();
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    for (int l = 0; l < k; ++l) {
      const double av = trans_a ? a(l, i) : a(i, l);
      if (av == 0.0) continue;
      if (trans_b) {
        for (int j = 0; j < n; ++j) ci[j] += av * b(j, l);
      } else {
        const double* bl = b.row(l);
        for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
      }
    }
  }
}
#endif

Matrix gemm(bool trans_a, bool trans_b, const Matrix& a, const Matrix& b) {
  const int m = trans_a ? a.cols() : a.rows();
  const int ka = trans_a ? a.rows() : a.cols();
  const int kb = trans_b ? b.cols() : b.rows();
  const int n = trans_b ? b.rows() : b.cols();
  if (ka != kb) {
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(ka) +
                                " != " + std::to_string(kb));
  }
  Matrix c(m, n);
  if (m == 0 || n == 0 || ka == 0) return c;
#ifdef GEM_USE_CBLAS
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, ka, 1.0, a.data(), a.cols(),
              b.data(), b.cols(), 0.0, c.data(), n);
#else
  gemm_naive(trans_a, trans_b, a, b, c);
#endif
  return c;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) { return gemm(false, false, a, b); }
Matrix matmul_tn(const Matrix& a, const Matrix& b) { return gemm(true, false, a, b); }
Matrix matmul_nt(const Matrix& a, const Matrix& b) { return gemm(false, true, a, b); }

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix relu(const Matrix& a) {
  Matrix r(a.rows(), a.cols());
  const double* src = a.data();
  double* dst = r.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  return r;
}

Matrix relu_backward(const Matrix& a, const Matrix& upstream) {
  if (!a.same_shape(upstream)) {
    throw std::invalid_argument("relu_backward: shape mismatch");
  }
  Matrix r(a.rows(), a.cols());
  const double* av = a.data();
  const double* up = upstream.data();
  double* dst = r.data();
  for (std::size_t i = 0; i < a.size(); ++i) dst[i] = av[i] > 0.0 ? up[i] : 0.0;
  return r;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  const int n = logits.cols();
  for (int i = 0; i < logits.rows(); ++i) {
    const double* z = logits.row(i);
    double* pi = p.row(i);
    double zmax = z[0];
    for (int j = 1; j < n; ++j) zmax = std::max(zmax, z[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      pi[j] = std::exp(z[j] - zmax);
      sum += pi[j];
    }
    for (int j = 0; j < n; ++j) pi[j] /= sum;
  }
  return p;
}

SoftmaxXent softmax_xent(const Matrix& logits, std::span<const int> labels) {
  const int n = logits.rows(), c = logits.cols();
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("softmax_xent: one label per row required");
  }
  if (n == 0) throw std::domain_error("softmax_xent: empty batch");
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw std::domain_error("softmax_xent: label " + std::to_string(labels[i]) +
                              " out of range [0," + std::to_string(c) + ")");
    }
  }
  SoftmaxXent out{0.0, softmax(logits)};
  const double inv_n = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const double* z = logits.row(i);
    double* d = out.dlogits.row(i);
    double zmax = z[0];
    for (int j = 1; j < c; ++j) zmax = std::max(zmax, z[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) sum += std::exp(z[j] - zmax);
    // -log p(label) = log(sum exp(z - zmax)) - (z_label - zmax)
    out.loss += std::log(sum) - (z[labels[i]] - zmax);
    for (int j = 0; j < c; ++j) d[j] *= inv_n;
    d[labels[i]] -= inv_n;
  }
  out.loss *= inv_n;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
#ifdef GEM_USE_CBLAS
  return cblas_ddot(static_cast<int>(a.size()), a.data(), 1, b.data(), 1);
#else
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
#endif
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace gem
