#include "mesh_dispatch/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mesh_dispatch/energy_hub.hpp"

namespace mesh_dispatch {

Topology::Topology(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
  if (n_ < 1) throw ModelError("topology needs at least one node");
  for (auto& [a, b] : edges_) {
    if (a < 1 || a > n_ || b < 1 || b > n_) {
      std::ostringstream msg;
      msg << "edge " << a << "-" << b << " references a node outside 1.." << n_;
      throw ModelError(msg.str());
    }
    if (a == b) {
      std::ostringstream msg;
      msg << "self-loop on node " << a;
      throw ModelError(msg.str());
    }
    if (a > b) std::swap(a, b);
  }
  std::sort(edges_.begin(), edges_.end());
  auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) {
    std::ostringstream msg;
    msg << "duplicate edge " << dup->first << "-" << dup->second;
    throw ModelError(msg.str());
  }
}

bool Topology::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

std::vector<int> Topology::degrees() const {
  std::vector<int> deg(n_, 0);
  for (const auto& [a, b] : edges_) {
    ++deg[a - 1];
    ++deg[b - 1];
  }
  return deg;
}

bool Topology::connected() const {
  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n_;
  for (const auto& [a, b] : edges_) {
    int ra = find(a - 1), rb = find(b - 1);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

WeightMatrix metropolis_weights(const Topology& t) {
  if (!t.connected()) {
    throw ModelError("communication graph is disconnected");
  }
  const int n = t.size();
  const auto deg = t.degrees();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : t.edges()) {
    const double wij = 1.0 / (1.0 + std::max(deg[a - 1], deg[b - 1]));
    w(a - 1, b - 1) = wij;
    w(b - 1, a - 1) = wij;
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return WeightMatrix(std::move(w));
}

bool validate_weights(const WeightMatrix& w, const Topology& t, double tol) {
  const int n = t.size();
  const auto& m = w.matrix();
  if (m.rows() != n || m.cols() != n) return false;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v) || v < -tol || v > 1.0 + tol) return false;
      if (std::abs(v - m(j, i)) > tol) return false;
      if (i != j && !t.has_edge(i + 1, j + 1) && std::abs(v) > tol) return false;
    }
    if (std::abs(m.row(i).sum() - 1.0) > tol) return false;
    if (std::abs(m.col(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

double spectral_gap(const WeightMatrix& w, double rel_tol, int max_iterations) {
  const int n = w.size();
  const Eigen::MatrixXd a =
      w.matrix() - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  // Iterate on A^T A, which is PSD, so the Rayleigh quotient increases
  // monotonically even when A has eigenvalues of equal magnitude and
  // opposite sign.
  const Eigen::MatrixXd gram = a.transpose() * a;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = std::sin(1.0 + 1.7 * i) + 0.3;
  v.array() -= v.mean();
  double norm = v.norm();
  if (norm == 0.0) return 0.0;
  v /= norm;
  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next = gram * v;
    const double rq = v.dot(next);
    norm = next.norm();
    if (norm <= 1e-300) return 0.0;
    next /= norm;
    if (it > 0 && std::abs(rq - estimate) <= rel_tol * std::max(rq, 1e-300)) {
      return std::sqrt(std::max(rq, 0.0));
    }
    estimate = rq;
    v = std::move(next);
  }
  throw NumericError("spectral_gap: power iteration did not converge");
}

}  // namespace mesh_dispatch
