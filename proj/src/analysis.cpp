#include "mesh_dispatch/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace mesh_dispatch {

namespace {

EnergyVector supply_side(const ExtendedDecision& u) {
  return {u[0], u[1] + u[2]};
}

template <class Field>
EnergyVector mean_of(std::span<const NodeState> states, Field field) {
  EnergyVector acc = EnergyVector::Zero();
  for (const auto& s : states) acc += field(s);
  return states.empty() ? acc : EnergyVector(acc / double(states.size()));
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

EnergyVector mismatch(std::span<const NodeState> states) {
  EnergyVector acc = EnergyVector::Zero();
  for (const auto& s : states) acc += s.r - supply_side(s.u);
  return acc;
}

RelativeError relative_error(const Eigen::VectorXd& x_k,
                             const Eigen::VectorXd& x_star) {
  if (x_k.size() != x_star.size()) {
    throw std::invalid_argument("relative_error: dimension mismatch");
  }
  const double ref = x_star.norm();
  const double diff = (x_k - x_star).norm();
  if (ref == 0.0) return {diff, true};
  return {diff / ref, false};
}

double welfare_gap(double f_k, double f_star) {
  if (f_star == 0.0) throw DomainError("welfare gap undefined for F* = 0");
  return (f_k - f_star) / f_star;
}

Spread consensus_spread(std::span<const NodeState> states) {
  const EnergyVector mu_bar = mean_of(states, [](const NodeState& s) { return s.mu; });
  const EnergyVector e_bar = mean_of(states, [](const NodeState& s) { return s.e; });
  Spread out;
  for (const auto& s : states) {
    out.mu = std::max(out.mu, (s.mu - mu_bar).norm());
    out.e = std::max(out.e, (s.e - e_bar).norm());
  }
  return out;
}

CertificateReport lyapunov_certificate(const WeightMatrix& w, double tol) {
  const int n = w.size();
  const int m = 2 * n;
  const Eigen::MatrixXd avg = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd w1_small = w.matrix() - avg;
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      w1(2 * i, 2 * j) = w1(2 * i + 1, 2 * j + 1) = w1_small(i, j);
    }
  }

  CertificateReport rep;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (w1 + w1.transpose()));
  const Eigen::VectorXd lam = es.eigenvalues();
  rep.gamma_W1 = lam.cwiseAbs().maxCoeff();

  // I - W1 is singular exactly when W1 has eigenvalue 1.
  const double min_gap = (Eigen::VectorXd::Ones(m) - lam).cwiseAbs().minCoeff();
  if (!(min_gap > kPositiveDefiniteThreshold)) {
    rep.singular = true;
    rep.verdict = false;
    rep.P_min_eig = rep.contraction_min_eig = std::nan("");
    rep.condition_42a_residual = std::nan("");
    return rep;
  }

  const Eigen::MatrixXd v = es.eigenvectors();
  const Eigen::VectorXd inv = (Eigen::VectorXd::Ones(m) - lam).cwiseInverse();
  const Eigen::MatrixXd x = v * inv.asDiagonal() * v.transpose();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m, m);

  Eigen::MatrixXd p(2 * m, 2 * m);
  p << 2.0 * id, x - 2.0 * id, x - 2.0 * id, x * x - 2.0 * x + 2.0 * id;

  Eigen::MatrixXd wt = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  wt.topLeftCorner(m, m) = w1;
  wt.topRightCorner(m, m) = w1;
  wt.bottomRightCorner(m, m) = w1;

  Eigen::MatrixXd it(2 * m, m);
  it << id, id;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, 2 * m);
  h.leftCols(m) = id;

  const Eigen::MatrixXd lhs =
      it.transpose() * p * (Eigen::MatrixXd::Identity(2 * m, 2 * m) - wt);
  rep.condition_42a_residual = (lhs - h).norm();
  rep.P_min_eig = min_eigenvalue(p);
  rep.contraction_min_eig = min_eigenvalue(p - wt.transpose() * p * wt);
  rep.verdict = rep.gamma_W1 < 1.0 && rep.P_min_eig > kPositiveDefiniteThreshold &&
                rep.contraction_min_eig > kPositiveDefiniteThreshold &&
                rep.condition_42a_residual <= tol;
  return rep;
}

double lyapunov_surrogate(std::span<const NodeState> states,
                          const EnergyVector& mu_star, double rho) {
  const EnergyVector mu_bar = mean_of(states, [](const NodeState& s) { return s.mu; });
  const EnergyVector e_bar = mean_of(states, [](const NodeState& s) { return s.e; });
  double v = (mu_bar - mu_star).squaredNorm();
  for (const auto& s : states) {
    v += (s.mu - mu_bar).squaredNorm() + rho * rho * (s.e - e_bar).squaredNorm();
  }
  return v;
}

}  // namespace mesh_dispatch
