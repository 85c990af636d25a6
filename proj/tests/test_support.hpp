#pragma once

// Test-only oracles: central finite differences, rank correlation and the
// classical 2x2 MCC. Nothing here calls the code paths being checked beyond
// plain forward evaluation.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "iois/feed_forward.hpp"
#include "iois/metrics.hpp"
#include "iois/num_array.hpp"

namespace test_support {

inline constexpr double kStep = 1e-4;

// ||a - b|| / max(||a||, ||b||, 1e-6)
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-6});
}

template <class F>
iois::NumArray finite_difference_input(F&& f, const iois::NumArray& x) {
  iois::NumArray g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    iois::NumArray plus = x, minus = x;
    plus[i] += kStep;
    minus[i] -= kStep;
    g[i] = (f(plus) - f(minus)) / (2.0 * kStep);
  }
  return g;
}

template <class F>
double finite_difference_param(const iois::FeedForwardNet& net, std::size_t index, F&& f) {
  iois::FeedForwardNet plus = net, minus = net;
  iois::parameter_at(plus, index) += kStep;
  iois::parameter_at(minus, index) -= kStep;
  return (f(plus) - f(minus)) / (2.0 * kStep);
}

// True when no relu pre-activation lies within margin of its kink, so the
// network is differentiable throughout the finite-difference stencil.
inline bool away_from_kinks(const iois::FeedForwardNet& net, const iois::NumArray& input,
                            double margin = 1e-3) {
  if (net.activation() != iois::Activation::relu) return true;
  iois::NumArray x = input.rank() == 1 ? iois::NumArray({1, input.size()},
                                                        std::vector<double>(input.data().begin(), input.data().end()))
                                       : input;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto& w = layers[l].weight;
    iois::NumArray z({x.rows(), w.cols()});
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        double s = layers[l].bias[j];
        for (std::size_t k = 0; k < w.rows(); ++k) s += x(r, k) * w(k, j);
        if (std::abs(s) < margin) return false;
        z(r, j) = s > 0.0 ? s : 0.0;
      }
    }
    x = z;
  }
  return true;
}

inline std::vector<std::size_t> pick_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(n, k));
  std::sort(all.begin(), all.end());
  return all;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Pearson correlation of the (average) ranks.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)), class 1 positive, 0 on a
// vanishing denominator.
inline double binary_mcc(const iois::ConfusionMatrix& cm) {
  const double tp = static_cast<double>(cm.at(1, 1)), tn = static_cast<double>(cm.at(0, 0));
  const double fp = static_cast<double>(cm.at(0, 1)), fn = static_cast<double>(cm.at(1, 0));
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  return den == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
}

}  // namespace test_support
