#pragma once

#include <map>
#include <vector>

#include "dynaweight/graph.hpp"

namespace dynaweight {

/// N x N row-stochastic mixing matrix with graph-constrained sparsity:
/// entries[i][j] > 0 only for j = i or j a neighbor of i. Dense storage;
/// simulated networks stay small.
struct WeightMatrix {
  int n = 0;
  std::vector<double> entries;  // row-major n*n

  static WeightMatrix zero(int n);

  double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }

  bool is_row_stochastic(double tol = 1e-12) const;
  bool matches_sparsity(const Graph& g) const;
  bool is_symmetric(double tol = 1e-12) const;
  bool is_doubly_stochastic(double tol = 1e-12) const;
};

/// Cross-evaluation losses and the centralities derived from them.
/// losses[j] maps m -> L_jm for m in {j} u N_j: the loss of server j's
/// model evaluated on server m's local data.
struct LossTable {
  int n = 0;
  std::vector<std::map<int, double>> losses;
  std::vector<double> centralities;
};

// w_ij = 1/(1+d_i) over the closed neighborhood of i.
WeightMatrix simple_weights(const Graph& g);

// w_ij = 1/(1+max(d_i,d_j)) for neighbors, residual on the diagonal.
// Symmetric and doubly stochastic by construction.
WeightMatrix metropolis_weights(const Graph& g);

// p_j = (1+d_j) / sum_m L_jm over the closed neighborhood: the inverse of
// j's mean loss on its own and its neighbors' data. The denominator is
// floored at kLossFloor so a perfectly fit model cannot blow up p_j.
inline constexpr double kLossFloor = 1e-8;
double centrality(const Graph& g, const LossTable& table, int j);

// w_ij = p_j / sum of p over the closed neighborhood of i. Row-stochastic,
// graph-sparse, scale-invariant in p; not symmetric in general.
WeightMatrix dynaweight_weights(const Graph& g, const std::vector<double>& centralities);

// 1 - |lambda_2| of a row-stochastic matrix, where lambda_2 is the second
// largest eigenvalue in magnitude. Power iteration on the mean-deflated
// matrix to kSpectralTol. Diagnostic only.
inline constexpr double kSpectralTol = 1e-9;
double spectral_gap(const WeightMatrix& w);

}  // namespace dynaweight
