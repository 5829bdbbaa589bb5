#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "revgen/prng.hpp"

namespace revgen::num {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  std::size_t size() const { return data.size(); }
};

// result[i] = sum_j m(i,j) * v[j]. Throws ShapeError on width mismatch.
Vector matvec(const Matrix& m, const Vector& v);

// Accumulating form used by hot loops: out must already have m.rows entries;
// the product is added on top of whatever out holds.
void matvec_add(const Matrix& m, std::span<const double> v,
                std::span<double> out);

// out[j] += sum_i m(i,j) * a[i]  (transpose application, accumulating).
void matvec_transpose_add(const Matrix& m, std::span<const double> a,
                          std::span<double> out);

// m(i,j) += a[i] * b[j]  (rank-1 update, accumulating).
void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b);

// Numerically stable softmax (max subtraction). Throws ShapeError when empty.
Vector softmax(const Vector& logits);

// Elementwise logistic function; outputs in (0, 1).
Vector sigmoid(const Vector& v);

// Elementwise tanh; outputs in (-1, 1).
Vector tanh_map(const Vector& v);

// -ln(pred[target_index]) with the probability clamped at 1e-300 before the
// log. pred must sum to 1 within 1e-9.
double cross_entropy(const Vector& pred, std::size_t target_index);

// Draws index i with probability probs[i]. probs must sum to 1 within 1e-9.
std::size_t sample_categorical(const Vector& probs, Prng& rng);

// Index of the largest entry (first one on ties). Throws ShapeError on empty.
std::size_t argmax(const Vector& v);

}  // namespace revgen::num
