#include "mesh_dispatch/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mesh_dispatch::qp {

namespace {

struct Direction {
  Eigen::VectorXd dx, ds, dz;
};

// Newton direction for the perturbed KKT system with complementarity
// right-hand side rc.
Direction newton_direction(const Problem& p, const Eigen::LDLT<Eigen::MatrixXd>& k,
                           const Eigen::VectorXd& d, const Eigen::VectorXd& s,
                           const Eigen::VectorXd& rd, const Eigen::VectorXd& rp,
                           const Eigen::VectorXd& rc) {
  const Eigen::VectorXd rc_over_s = rc.cwiseQuotient(s);
  const Eigen::VectorXd rhs =
      -rd - p.G.transpose() * d.cwiseProduct(rp) + p.G.transpose() * rc_over_s;
  Direction out;
  out.dx = k.solve(rhs);
  const Eigen::VectorXd gdx = p.G * out.dx;
  out.dz = d.cwiseProduct(gdx + rp) - rc_over_s;
  out.ds = -rp - gdx;
  return out;
}

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

double scale_of(const Eigen::VectorXd& v) {
  return 1.0 + (v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0);
}

// Solves the equality-constrained QP on the face selected by `active`. Rows
// are added greedily in order of decreasing multiplier and skipped when
// linearly dependent on rows already chosen.
bool polish(const Problem& p, const Eigen::VectorXd& z_ipm, double tol,
            Eigen::VectorXd& x, Eigen::VectorXd& z,
            const std::vector<int>& active) {
  const Eigen::Index n = p.Q.rows();
  std::vector<int> order = active;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return z_ipm[a] > z_ipm[b]; });
  std::vector<int> rows;
  Eigen::MatrixXd basis(0, n);
  for (int i : order) {
    Eigen::MatrixXd trial(basis.rows() + 1, n);
    trial << basis, p.G.row(i);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
    lu.setThreshold(1e-10);
    if (lu.rank() == trial.rows()) {
      basis = std::move(trial);
      rows.push_back(i);
    }
    if (static_cast<Eigen::Index>(rows.size()) == n) break;
  }
  const Eigen::Index a = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + a, n + a);
  Eigen::VectorXd rhs(n + a);
  kkt.topLeftCorner(n, n) = p.Q;
  rhs.head(n) = -p.q;
  for (Eigen::Index k = 0; k < a; ++k) {
    kkt.block(n + k, 0, 1, n) = p.G.row(rows[k]);
    kkt.block(0, n + k, n, 1) = p.G.row(rows[k]).transpose();
    rhs[n + k] = p.h[rows[k]];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;

  Eigen::VectorXd xp = sol.head(n);
  Eigen::VectorXd zp = Eigen::VectorXd::Zero(p.h.size());
  for (Eigen::Index k = 0; k < a; ++k) zp[rows[k]] = sol[n + k];

  const double zscale = scale_of(z_ipm);
  if (zp.minCoeff() < -tol * zscale) return false;
  zp = zp.cwiseMax(0.0);

  // Snap variables held by unit bound rows exactly onto the bound.
  for (int i : rows) {
    int nonzero = -1;
    int count = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (p.G(i, j) != 0.0) {
        nonzero = static_cast<int>(j);
        ++count;
      }
    }
    if (count == 1 && std::abs(p.G(i, nonzero)) == 1.0) {
      xp[nonzero] = p.h[i] * p.G(i, nonzero);
    }
  }
  const Eigen::VectorXd slack = p.h - p.G * xp;
  if (slack.minCoeff() < -tol * scale_of(p.h)) return false;

  x = std::move(xp);
  z = std::move(zp);
  return true;
}

}  // namespace

double objective(const Problem& p, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(p.Q * x) + p.q.dot(x);
}

Result solve(const Problem& p, const Options& opts) {
  const Eigen::Index n = p.Q.rows();
  const Eigen::Index m = p.G.rows();
  Result res;

  // Least-squares start, then push slacks and multipliers into the interior.
  Eigen::MatrixXd k0 = p.Q + p.G.transpose() * p.G;
  Eigen::VectorXd x = k0.ldlt().solve(-p.q + p.G.transpose() * p.h);
  if (!x.allFinite()) x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s = (p.h - p.G * x).cwiseMax(1.0);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(m);

  const double dscale = scale_of(p.q);
  const double pscale = scale_of(p.h);

  // Best iterate by scaled KKT merit; the factorization limits attainable
  // accuracy, so stagnation ends the loop and the polish step finishes.
  Eigen::VectorXd best_x = x, best_z = z, best_s = s;
  double best_merit = std::numeric_limits<double>::infinity();
  int since_best = 0;
  constexpr int kStallLimit = 8;
  constexpr double kStallRegion = 1e-6;

  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd rd = p.Q * x + p.q + p.G.transpose() * z;
    const Eigen::VectorXd rp = p.G * x + s - p.h;
    const double mu = m > 0 ? s.dot(z) / static_cast<double>(m) : 0.0;
    // Complementarity is judged pairwise and unscaled: averaging hides the
    // weakly active rows at degenerate vertices that the polish must see.
    const double comp = m > 0 ? s.cwiseProduct(z).maxCoeff() : 0.0;
    const double merit =
        std::max({rd.lpNorm<Eigen::Infinity>() / dscale,
                  m > 0 ? rp.lpNorm<Eigen::Infinity>() / pscale : 0.0, comp});
    res.iterations = it;
    if (merit < best_merit) {
      best_merit = merit;
      best_x = x;
      best_z = z;
      best_s = s;
      since_best = 0;
    } else if (best_merit <= kStallRegion && ++since_best >= kStallLimit) {
      break;
    }
    if (merit <= opts.tol) {
      res.status = Status::Solved;
      break;
    }

    const Eigen::VectorXd d = z.cwiseQuotient(s);
    const Eigen::MatrixXd k = p.Q + p.G.transpose() * d.asDiagonal() * p.G;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k);

    // Predictor.
    const Eigen::VectorXd rc_aff = s.cwiseProduct(z);
    Direction aff = newton_direction(p, ldlt, d, s, rd, rp, rc_aff);
    const double alpha_aff =
        std::min(max_step(s, aff.ds), max_step(z, aff.dz));
    const double mu_aff =
        (s + alpha_aff * aff.ds).dot(z + alpha_aff * aff.dz) / static_cast<double>(m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector.
    const Eigen::VectorXd rc = rc_aff + aff.ds.cwiseProduct(aff.dz) -
                               Eigen::VectorXd::Constant(m, sigma * mu);
    Direction dir = newton_direction(p, ldlt, d, s, rd, rp, rc);
    const double alpha =
        std::min(1.0, 0.99 * std::min(max_step(s, dir.ds), max_step(z, dir.dz)));

    const Eigen::VectorXd xn = x + alpha * dir.dx;
    const Eigen::VectorXd sn = s + alpha * dir.ds;
    const Eigen::VectorXd zn = z + alpha * dir.dz;
    if (!xn.allFinite() || !sn.allFinite() || !zn.allFinite() ||
        sn.minCoeff() <= 0.0 || zn.minCoeff() <= 0.0) {
      break;
    }
    x = xn;
    s = sn;
    z = zn;
    res.iterations = it + 1;
  }
  if (res.status != Status::Solved) {
    x = best_x;
    z = best_z;
    s = best_s;
  }

  res.x = x;
  res.z = z;
  if (opts.polish && m > 0) {
    // Candidate faces: the strict-complementarity guess first, then every row
    // with a small slack, which catches degenerate vertices.
    std::vector<std::vector<int>> faces(1);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (s[i] < z[i]) faces[0].push_back(static_cast<int>(i));
    }
    for (double rel : {1e-9, 1e-7, 1e-5}) {
      std::vector<int> face;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (s[i] < z[i] || s[i] <= rel * (1.0 + std::abs(p.h[i]))) {
          face.push_back(static_cast<int>(i));
        }
      }
      if (face != faces.back()) faces.push_back(std::move(face));
    }
    Problem exact = p;
    if (opts.polish_Q) exact.Q = *opts.polish_Q;
    for (const auto& face : faces) {
      Eigen::VectorXd xp, zp;
      const bool ok = (opts.polish_Q && polish(exact, z, 1e-9, xp, zp, face)) ||
                      polish(p, z, 1e-9, xp, zp, face);
      if (ok) {
        res.x = std::move(xp);
        res.z = std::move(zp);
        res.polished = true;
        // An exact solve on a face with nonnegative multipliers and feasible
        // slacks satisfies every optimality condition.
        res.status = Status::Solved;
        break;
      }
    }
  }
  res.objective = objective(p, res.x);
  return res;
}

bool feasible(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, double tol) {
  struct Row {
    std::vector<double> a;
    double b;
  };
  const Eigen::Index n = G.cols();
  std::vector<Row> rows;
  rows.reserve(G.rows());
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    Row r{std::vector<double>(n), h[i]};
    for (Eigen::Index j = 0; j < n; ++j) r.a[j] = G(i, j);
    rows.push_back(std::move(r));
  }
  auto normalize = [](Row& r) {
    double big = 0.0;
    for (double v : r.a) big = std::max(big, std::abs(v));
    if (big > 0.0) {
      for (double& v : r.a) v /= big;
      r.b /= big;
    }
  };
  for (auto& r : rows) normalize(r);

  for (Eigen::Index j = n - 1; j >= 0; --j) {
    std::vector<Row> pos, neg, rest;
    for (auto& r : rows) {
      if (r.a[j] > 1e-12) {
        pos.push_back(std::move(r));
      } else if (r.a[j] < -1e-12) {
        neg.push_back(std::move(r));
      } else {
        r.a[j] = 0.0;
        rest.push_back(std::move(r));
      }
    }
    for (const auto& up : pos) {
      for (const auto& lo : neg) {
        const double cu = 1.0 / up.a[j];
        const double cl = -1.0 / lo.a[j];
        Row r{std::vector<double>(n), up.b * cu + lo.b * cl};
        for (Eigen::Index c = 0; c < n; ++c) r.a[c] = up.a[c] * cu + lo.a[c] * cl;
        r.a[j] = 0.0;
        normalize(r);
        rest.push_back(std::move(r));
      }
    }
    rows = std::move(rest);
  }
  return std::all_of(rows.begin(), rows.end(),
                     [tol](const Row& r) { return r.b >= -tol; });
}

Eigen::VectorXd project(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                        const Eigen::VectorXd& v) {
  Problem p{Eigen::MatrixXd::Identity(v.size(), v.size()), -v, G, h};
  Options opts;
  opts.tol = 1e-13;
  return solve(p, opts).x;
}

}  // namespace mesh_dispatch::qp
