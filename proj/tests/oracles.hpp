#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <vector>

#include "scml/tensor.hpp"

namespace scml::testing {

inline double cosine(std::span<const double> a, std::span<const double> b) {
  long double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<long double>(a[i]) * b[i];
    aa += static_cast<long double>(a[i]) * a[i];
    bb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(ab / std::sqrt(aa * bb));
}

/// Direct transcription of the multi-similarity loss with plain loops.
inline double ms_oracle(const Tensor& anchors, const std::vector<Tensor>& pos, const std::vector<Tensor>& neg, double alpha,
                 double beta, double lambda) {
  long double total = 0;
  for (std::size_t i = 0; i < anchors.rows(); ++i) {
    long double sp = 0, sn = 0;
    for (std::size_t k = 0; k < pos[i].rows(); ++k)
      sp += std::exp(static_cast<long double>(-alpha * (cosine(anchors.row(i), pos[i].row(k)) - lambda)));
    for (std::size_t k = 0; k < neg[i].rows(); ++k)
      sn += std::exp(static_cast<long double>(beta * (cosine(anchors.row(i), neg[i].row(k)) - lambda)));
    total += std::log1p(sp) / alpha + std::log1p(sn) / beta;
  }
  return static_cast<double>(total / anchors.rows());
}

inline double bce_oracle(const Tensor& z, const Tensor& t) {
  long double acc = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const long double zi = z[i];
    const long double p = 1.0L / (1.0L + std::exp(-zi));
    acc -= t[i] * std::log(p) + (1.0L - t[i]) * std::log(1.0L - p);
  }
  return static_cast<double>(acc / z.size());
}

/// Answer set minus the top-n predictions, ranked with a stable sort.
inline Tensor pseudo_oracle(const Tensor& pred, const std::set<std::size_t>& answers, int top_n) {
  std::vector<std::size_t> idx(pred.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pred[a] > pred[b]; });
  const std::set<std::size_t> top(idx.begin(), idx.begin() + top_n);
  Tensor out(Shape{pred.size()});
  for (std::size_t i : answers)
    if (!top.count(i)) out[i] = 1.0;
  return out;
}

}  // namespace scml::testing
