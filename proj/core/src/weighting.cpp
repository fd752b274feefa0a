#include "dynaweight/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dynaweight {

WeightMatrix WeightMatrix::zero(int n) {
  WeightMatrix w;
  w.n = n;
  w.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  return w;
}

bool WeightMatrix::is_row_stochastic(double tol) const {
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double v = at(i, j);
      if (v < 0.0 || v > 1.0 + tol) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

bool WeightMatrix::matches_sparsity(const Graph& g) const {
  if (g.n != n) return false;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (at(i, j) != 0.0 && i != j && !g.has_edge(i, j)) return false;
    }
  }
  return true;
}

bool WeightMatrix::is_symmetric(double tol) const {
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(at(i, j) - at(j, i)) > tol) return false;
    }
  }
  return true;
}

bool WeightMatrix::is_doubly_stochastic(double tol) const {
  if (!is_row_stochastic(tol)) return false;
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += at(i, j);
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

WeightMatrix simple_weights(const Graph& g) {
  WeightMatrix w = WeightMatrix::zero(g.n);
  for (int i = 0; i < g.n; ++i) {
    double v = 1.0 / (1.0 + g.degree(i));
    w.at(i, i) = v;
    for (int j : g.adjacency[i]) w.at(i, j) = v;
  }
  return w;
}

WeightMatrix metropolis_weights(const Graph& g) {
  WeightMatrix w = WeightMatrix::zero(g.n);
  for (int i = 0; i < g.n; ++i) {
    double off = 0.0;
    for (int j : g.adjacency[i]) {
      double v = 1.0 / (1.0 + std::max(g.degree(i), g.degree(j)));
      w.at(i, j) = v;
      off += v;
    }
    w.at(i, i) = 1.0 - off;
  }
  return w;
}

double centrality(const Graph& g, const LossTable& table, int j) {
  if (j < 0 || j >= g.n) {
    throw std::out_of_range("centrality: node " + std::to_string(j) + " outside [0, " +
                            std::to_string(g.n) + ")");
  }
  const auto& row = table.losses.at(j);
  double total = 0.0;
  auto take = [&](int m) {
    auto it = row.find(m);
    if (it == row.end()) {
      throw std::invalid_argument("centrality: missing loss L_" + std::to_string(j) + "," +
                                  std::to_string(m));
    }
    if (it->second < 0.0) {
      throw std::invalid_argument("centrality: negative loss L_" + std::to_string(j) + "," +
                                  std::to_string(m));
    }
    total += it->second;
  };
  take(j);
  for (int m : g.adjacency[j]) take(m);
  return (1.0 + g.degree(j)) / std::max(total, kLossFloor);
}

WeightMatrix dynaweight_weights(const Graph& g, const std::vector<double>& centralities) {
  if (static_cast<int>(centralities.size()) != g.n) {
    throw std::invalid_argument("dynaweight_weights: expected " + std::to_string(g.n) +
                                " centralities, got " + std::to_string(centralities.size()));
  }
  for (int k = 0; k < g.n; ++k) {
    if (!(centralities[k] > 0.0)) {
      throw std::invalid_argument("dynaweight_weights: non-positive centrality p_" +
                                  std::to_string(k));
    }
  }
  WeightMatrix w = WeightMatrix::zero(g.n);
  for (int i = 0; i < g.n; ++i) {
    double denom = centralities[i];
    for (int j : g.adjacency[i]) denom += centralities[j];
    w.at(i, i) = centralities[i] / denom;
    for (int j : g.adjacency[i]) w.at(i, j) = centralities[j] / denom;
  }
  return w;
}

double spectral_gap(const WeightMatrix& w) {
  if (!w.is_row_stochastic(1e-9)) {
    throw std::invalid_argument("spectral_gap: matrix is not row-stochastic");
  }
  const int n = w.n;
  if (n <= 1) return 1.0;

  // Deflate the Perron pair by subtracting the all-ones rank-1 term; the
  // remaining spectrum is that of w without one unit eigenvalue.
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += w.at(i, j) * x[j];
      y[i] = acc - mean;
    }
  };

  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) x[i] = std::cos(1.0 + i * 0.7368421052631579);
  double norm = 0.0;
  for (double v : x) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : x) v /= norm;

  double est = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    apply(x, y);
    double ynorm = 0.0;
    for (double v : y) ynorm += v * v;
    ynorm = std::sqrt(ynorm);
    if (ynorm < kSpectralTol * kSpectralTol) return 1.0;  // deflated matrix is ~0
    if (std::abs(ynorm - est) <= kSpectralTol * std::max(1.0, ynorm)) {
      est = ynorm;
      break;
    }
    est = ynorm;
    for (int i = 0; i < n; ++i) x[i] = y[i] / ynorm;
  }
  double gap = 1.0 - est;
  return gap < 0.0 ? 0.0 : gap;
}

}  // namespace dynaweight
