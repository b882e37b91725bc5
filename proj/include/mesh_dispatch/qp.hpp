#pragma once

#include <optional>

#include <Eigen/Dense>

namespace mesh_dispatch::qp {

/// minimize 0.5 x^T Q x + q^T x  subject to  G x <= h.
/// Dense and small: the hub subproblems have five variables and fourteen
/// halfspaces.
struct Problem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
};

struct Options {
  double tol = 1e-11;
  int max_iterations = 200;
  bool polish = true;
  /// Hessian for the polish step when it differs from Q, e.g. when Q carries
  /// a small ridge that should not bias the final point. The ridged Q is
  /// used as a fallback if the face system is singular without it.
  std::optional<Eigen::MatrixXd> polish_Q;
};

enum class Status { Solved, MaxIterations };

struct Result {
  Status status = Status::MaxIterations;
  Eigen::VectorXd x;
  Eigen::VectorXd z;  // inequality multipliers, z >= 0
  int iterations = 0;
  bool polished = false;
  double objective = 0.0;
};

double objective(const Problem& p, const Eigen::VectorXd& x);

/// Mehrotra predictor-corrector interior point, followed by an active-set
/// polish that solves the KKT system on the identified face and snaps
/// variables held by unit bound rows exactly onto the bound.
Result solve(const Problem& p, const Options& opts = {});

/// Exact emptiness test for {x : G x <= h} by Fourier-Motzkin elimination.
/// Intended for a handful of variables only.
bool feasible(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
              double tol = 1e-9);

/// Euclidean projection onto {x : G x <= h}.
Eigen::VectorXd project(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                        const Eigen::VectorXd& v);

}  // namespace mesh_dispatch::qp
