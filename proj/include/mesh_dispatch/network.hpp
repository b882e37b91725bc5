#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mesh_dispatch {

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected communication graph over node ids 1..n.
class Topology {
 public:
  using Edge = std::pair<int, int>;

  /// Normalizes each edge to (min, max) and sorts. Throws ModelError on
  /// self-loops, duplicate edges or ids outside 1..n.
  Topology(int n, std::vector<Edge> edges);

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(int i, int j) const;
  std::vector<int> degrees() const;
  bool connected() const;

 private:
  int n_;
  std::vector<Edge> edges_;
};

/// Symmetric doubly-stochastic gossip matrix.
class WeightMatrix {
 public:
  explicit WeightMatrix(Eigen::MatrixXd w) : w_(std::move(w)) {}

  int size() const { return static_cast<int>(w_.rows()); }
  double operator()(int i, int j) const { return w_(i, j); }
  const Eigen::MatrixXd& matrix() const { return w_; }

 private:
  Eigen::MatrixXd w_;
};

/// Metropolis-Hastings weights: w_ij = 1 / (1 + max(deg_i, deg_j)) on edges,
/// remainder on the diagonal. Throws ModelError for disconnected graphs.
WeightMatrix metropolis_weights(const Topology& t);

/// Checks entries in [0, 1], symmetry, unit row/column sums and that the
/// off-diagonal sparsity matches the edge set.
bool validate_weights(const WeightMatrix& w, const Topology& t, double tol);

/// Spectral radius of W - (1/n) 11^T by power iteration.
double spectral_gap(const WeightMatrix& w, double rel_tol = 1e-10,
                    int max_iterations = 200000);

/// sum_j w_ij * values_j, accumulated in ascending j. `i` is 0-based.
template <class Vec>
Vec neighbor_sum(const WeightMatrix& w, int i, std::span<const Vec> values) {
  if (static_cast<int>(values.size()) != w.size()) {
    throw std::invalid_argument("neighbor_sum: expected one value per node");
  }
  Vec acc = Vec::Zero(values.front().size());
  for (int j = 0; j < w.size(); ++j) {
    if (values[j].size() != acc.size()) {
      throw std::invalid_argument("neighbor_sum: dimension mismatch");
    }
    const double wij = w(i, j);
    if (wij != 0.0) acc += wij * values[j];
  }
  return acc;
}

}  // namespace mesh_dispatch
