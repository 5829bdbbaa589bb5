#include "revgen/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "revgen/error.hpp"

namespace revgen::num {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

void check_normalized(const Vector& probs, const char* op) {
  if (probs.empty()) {
    throw ShapeError(std::string(op) + ": empty probability vector");
  }
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError(std::string(op) + ": probabilities sum to " +
                          std::to_string(sum) + ", expected 1");
  }
}

}  // namespace

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols != v.size()) {
    throw ShapeError("matvec: matrix is " + shape_str(m) +
                     " but vector has length " + std::to_string(v.size()));
  }
  Vector out(m.rows, 0.0);
  matvec_add(m, v, out);
  return out;
}

void matvec_add(const Matrix& m, std::span<const double> v,
                std::span<double> out) {
  const double* row = m.data.data();
  for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * v[c];
    out[r] += acc;
  }
}

void matvec_transpose_add(const Matrix& m, std::span<const double> a,
                          std::span<double> out) {
  const double* row = m.data.data();
  for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
    const double ar = a[r];
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += ar * row[c];
  }
}

void outer_add(Matrix& m, std::span<const double> a, std::span<const double> b) {
  double* row = m.data.data();
  for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
    const double ar = a[r];
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

Vector softmax(const Vector& logits) {
  if (logits.empty()) throw ShapeError("softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-v[i]));
  return out;
}

Vector tanh_map(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

double cross_entropy(const Vector& pred, std::size_t target_index) {
  check_normalized(pred, "cross_entropy");
  if (target_index >= pred.size()) {
    throw IndexError("cross_entropy: target index " +
                     std::to_string(target_index) + " out of range for " +
                     std::to_string(pred.size()) + " classes");
  }
  const double p = std::max(pred[target_index], 1e-300);
  return -std::log(p);
}

std::size_t sample_categorical(const Vector& probs, Prng& rng) {
  check_normalized(probs, "sample_categorical");
  const double u = rng.next_double();
  double cdf = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cdf += probs[i];
    if (u < cdf) return i;
  }
  // Rounding can leave cdf marginally below 1; fall back to the last
  // nonzero-probability index.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

std::size_t argmax(const Vector& v) {
  if (v.empty()) throw ShapeError("argmax: empty input");
  return static_cast<std::size_t>(
      std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

}  // namespace revgen::num
