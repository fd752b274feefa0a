#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "dynaweight/graph.hpp"
#include "dynaweight/rng.hpp"
#include "dynaweight/weighting.hpp"

using namespace dynaweight;

namespace {

// Dense eigensolve oracle: second-largest eigenvalue magnitude.
double oracle_lambda2(const WeightMatrix& w) {
  Eigen::MatrixXd m(w.n, w.n);
  for (int i = 0; i < w.n; ++i) {
    for (int j = 0; j < w.n; ++j) m(i, j) = w.at(i, j);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m);
  std::vector<double> mags;
  for (int k = 0; k < w.n; ++k) mags.push_back(std::abs(solver.eigenvalues()[k]));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  return w.n > 1 ? mags[1] : 0.0;
}

std::vector<Graph> sample_graphs() {
  return {build_ring(4),    build_ring(8),  build_line(5),
          build_chordal(6), build_line(2),  build_chordal(8),
          build_static_exponential(8), build_static_exponential(16)};
}

LossTable uniform_losses(const Graph& g, double value) {
  LossTable t;
  t.n = g.n;
  t.losses.resize(g.n);
  for (int j = 0; j < g.n; ++j) {
    t.losses[j][j] = value;
    for (int m : g.adjacency[j]) t.losses[j][m] = value;
  }
  return t;
}

}  // namespace

TEST_CASE("simple weights") {
  Graph ring = build_ring(4);
  WeightMatrix w = simple_weights(ring);
  for (int i = 0; i < 4; ++i) {
    CHECK(w.at(i, i) == 1.0 / 3.0);
    for (int j : ring.adjacency[i]) CHECK(w.at(i, j) == 1.0 / 3.0);
  }
  CHECK(w.is_row_stochastic());
  CHECK(w.matches_sparsity(ring));

  Graph line = build_line(3);
  WeightMatrix wl = simple_weights(line);
  CHECK(wl.at(0, 0) == 0.5);
  CHECK(wl.at(0, 1) == 0.5);
  CHECK(wl.at(0, 2) == 0.0);
  CHECK(wl.at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(wl.is_row_stochastic());
  CHECK(!wl.is_symmetric());  // degree imbalance breaks symmetry
}

TEST_CASE("metropolis weights structure on every topology") {
  for (const Graph& g : sample_graphs()) {
    WeightMatrix w = metropolis_weights(g);
    CAPTURE(g.n);
    CHECK(w.is_row_stochastic(1e-12));
    CHECK(w.is_symmetric(1e-12));
    CHECK(w.is_doubly_stochastic(1e-12));
    CHECK(w.matches_sparsity(g));
  }
}

TEST_CASE("metropolis weights values") {
  Graph line = build_line(3);
  WeightMatrix w = metropolis_weights(line);
  // d = {1, 2, 1}; edge weight 1/(1+max) = 1/3, residual on diagonal
  CHECK(w.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(w.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(w.at(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Graph ring = build_ring(8);
  WeightMatrix wr = metropolis_weights(ring);
  for (int i = 0; i < 8; ++i) {
    CHECK(wr.at(i, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    for (int j : ring.adjacency[i]) CHECK(wr.at(i, j) == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("centrality") {
  Graph g = build_ring(8);
  // untrained 10-class model: every loss is ln(10), p = 1/ln(10)
  LossTable t = uniform_losses(g, std::log(10.0));
  for (int j = 0; j < 8; ++j) {
    CHECK(centrality(g, t, j) == doctest::Approx(1.0 / std::log(10.0)).epsilon(1e-14));
  }

  SUBCASE("missing loss is an error naming the pair") {
    t.losses[3].erase(2);
    CHECK_THROWS_WITH_AS(centrality(g, t, 3), doctest::Contains("3"), std::invalid_argument);
  }

  SUBCASE("all-zero losses hit the division floor") {
    LossTable z = uniform_losses(g, 0.0);
    CHECK(centrality(g, z, 0) == doctest::Approx(3.0 / kLossFloor));
  }

  SUBCASE("negative loss rejected") {
    t.losses[0][1] = -0.5;
    CHECK_THROWS_AS(centrality(g, t, 0), std::invalid_argument);
  }
}

TEST_CASE("adaptive weights structure") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.05, 5.0);
  for (const Graph& g : sample_graphs()) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> p(g.n);
      for (double& v : p) v = dist(rng);
      WeightMatrix w = dynaweight_weights(g, p);
      CAPTURE(g.n);
      CHECK(w.is_row_stochastic(1e-12));
      CHECK(w.matches_sparsity(g));

      // power-of-two scaling leaves every quotient bitwise unchanged
      std::vector<double> scaled = p;
      for (double& v : scaled) v *= 4.0;
      WeightMatrix ws = dynaweight_weights(g, scaled);
      CHECK(ws.entries == w.entries);
    }
  }
}

TEST_CASE("equal centralities reduce to simple weights") {
  for (const Graph& g : sample_graphs()) {
    std::vector<double> ones(g.n, 1.0);
    WeightMatrix wd = dynaweight_weights(g, ones);
    WeightMatrix wsimple = simple_weights(g);
    CHECK(wd.entries == wsimple.entries);  // identical, not merely close
  }
}

TEST_CASE("adaptive weights favor high-centrality neighbors") {
  Graph g = build_ring(4);
  std::vector<double> p = {1.0, 1.0, 4.0, 1.0};
  WeightMatrix w = dynaweight_weights(g, p);
  // rows of 2's neighbors put their largest mass on 2
  CHECK(w.at(1, 2) > w.at(1, 1));
  CHECK(w.at(1, 2) > w.at(1, 0));
  CHECK(w.at(3, 2) > w.at(3, 3));
  CHECK(w.at(3, 2) > w.at(3, 0));
  CHECK(w.at(1, 2) == doctest::Approx(4.0 / 6.0));

  CHECK_THROWS_AS(dynaweight_weights(g, {1.0, 0.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(dynaweight_weights(g, {1.0, 1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("spectral gap against closed form") {
  // ring-8 Metropolis is circulant: lambda_2 = (1 + sqrt(2)) / 3
  WeightMatrix w = metropolis_weights(build_ring(8));
  double expected = 1.0 - (1.0 + std::sqrt(2.0)) / 3.0;
  CHECK(spectral_gap(w) == doctest::Approx(expected).epsilon(5e-8));
}

TEST_CASE("spectral gap against dense eigensolve oracle") {
  for (const Graph& g : sample_graphs()) {
    WeightMatrix w = metropolis_weights(g);
    CAPTURE(g.n);
    CHECK(spectral_gap(w) == doctest::Approx(1.0 - oracle_lambda2(w)).epsilon(1e-7));
  }
}

TEST_CASE("spectral gap edge cases") {
  // complete graph: w = J/4 mixes in one step
  WeightMatrix w = metropolis_weights(build_chordal(4));
  CHECK(spectral_gap(w) == doctest::Approx(1.0).epsilon(1e-9));

  WeightMatrix bad = WeightMatrix::zero(3);
  CHECK_THROWS_AS(spectral_gap(bad), std::invalid_argument);
}

TEST_CASE("weight matrix predicates") {
  WeightMatrix w = WeightMatrix::zero(2);
  w.at(0, 0) = 0.5;
  w.at(0, 1) = 0.5;
  w.at(1, 0) = 0.25;
  w.at(1, 1) = 0.75;
  CHECK(w.is_row_stochastic());
  CHECK(!w.is_symmetric());
  CHECK(!w.is_doubly_stochastic());

  w.at(1, 0) = 0.5;
  w.at(1, 1) = 0.5;
  CHECK(w.is_doubly_stochastic());

  w.at(0, 0) = -0.1;
  w.at(0, 1) = 1.1;
  CHECK(!w.is_row_stochastic());  // negative entries rejected even if sums hold
}
