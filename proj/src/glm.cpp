#include "frontdoor/glm.hpp"

#include <cmath>
#include <stdexcept>

namespace frontdoor {

namespace {

constexpr double kScoreTol = 1e-10;
constexpr int kMaxIter = 100;

void check_dims(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  if (X.values.rows() != y.size() || X.values.rows() != w.size())
    throw std::invalid_argument("GLM dimension mismatch");
  if (w.minCoeff() < 0.0) throw std::invalid_argument("negative weight");
  if (!(w.sum() > 0.0)) throw std::invalid_argument("all-zero weights");
}

// Solve the weighted normal equations with rank handling: columns judged
// dependent by a column-pivoted QR get zero coefficients.
Eigen::VectorXd solve_weighted_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                                  const Eigen::VectorXd& w, bool* rank_deficient) {
  Eigen::VectorXd sw = w.array().sqrt();
  Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  Eigen::VectorXd zw = sw.asDiagonal() * z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  qr.setThreshold(1e-10);
  const Eigen::Index p = X.cols();
  const Eigen::Index r = qr.rank();
  if (r == p) {
    if (rank_deficient) *rank_deficient = false;
    return qr.solve(zw);
  }
  if (rank_deficient) *rank_deficient = true;
  // refit on the independent columns chosen by the pivoting
  Eigen::VectorXi perm = qr.colsPermutation().indices();
  Eigen::MatrixXd Xs(Xw.rows(), r);
  for (Eigen::Index j = 0; j < r; ++j) Xs.col(j) = Xw.col(perm[j]);
  Eigen::VectorXd bs = Xs.colPivHouseholderQr().solve(zw);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < r; ++j) beta[perm[j]] = bs[j];
  return beta;
}

double binomial_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                       const Eigen::VectorXd& w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double m = clamp_prob(mu[i]);
    ll += w[i] * (y[i] * std::log(m) + (1.0 - y[i]) * std::log(1.0 - m));
  }
  return ll;
}

}  // namespace

FittedGlm fit_ols(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  check_dims(X, y, w);
  FittedGlm m;
  m.family = GlmFamily::Gaussian;
  m.labels = X.labels;
  m.coef = solve_weighted_ls(X.values, y, w, &m.rank_deficient);
  Eigen::VectorXd resid = y - X.values * m.coef;
  m.max_score = (X.values.transpose() * (w.cwiseProduct(resid))).cwiseAbs().maxCoeff();
  m.converged = true;
  m.iterations = 1;
  return m;
}

FittedGlm fit_logistic(const DesignMatrix& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, const Eigen::VectorXd& offset,
                       std::vector<double>* loglik_trace) {
  check_dims(X, y, w);
  if (y.minCoeff() < 0.0 || y.maxCoeff() > 1.0)
    throw std::invalid_argument("binomial outcome outside [0,1]");
  const Eigen::Index n = X.values.rows(), p = X.values.cols();
  Eigen::VectorXd off = offset.size() ? offset : Eigen::VectorXd::Zero(n);
  if (off.size() != n) throw std::invalid_argument("offset length mismatch");
  if (!off.allFinite()) throw std::invalid_argument("non-finite offset");

  FittedGlm m;
  m.family = GlmFamily::Binomial;
  m.labels = X.labels;
  m.coef = Eigen::VectorXd::Zero(p);

  // score tolerance scaled by total weight: the log-likelihood (and hence
  // the score resolvable above rounding noise) grows with the weight mass
  const double score_tol = std::max(kScoreTol, 1e-11 * w.sum());

  Eigen::VectorXd eta = off;
  Eigen::VectorXd mu = eta.unaryExpr([](double e) { return expit(e); });
  double ll = binomial_loglik(y, mu, w);
  if (loglik_trace) loglik_trace->push_back(ll);

  for (int iter = 1; iter <= kMaxIter; ++iter) {
    m.iterations = iter;
    Eigen::VectorXd score = X.values.transpose() * (w.cwiseProduct(y - mu));
    m.max_score = score.cwiseAbs().maxCoeff();
    if (m.max_score <= score_tol) {
      m.converged = true;
      return m;
    }
    Eigen::VectorXd irls_w =
        w.cwiseProduct(mu.cwiseProduct((Eigen::VectorXd::Ones(n) - mu).eval()))
            .cwiseMax(1e-12);
    // working response for the step from the current beta
    Eigen::VectorXd z = (eta - off) + (y - mu).cwiseQuotient(
                                          mu.cwiseProduct((Eigen::VectorXd::Ones(n) - mu).eval())
                                              .cwiseMax(1e-12));
    Eigen::VectorXd beta_new = solve_weighted_ls(X.values, z, irls_w, &m.rank_deficient);
    // step-halving: accept only likelihood-nondecreasing steps
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      Eigen::VectorXd beta_try = m.coef + step * (beta_new - m.coef);
      Eigen::VectorXd eta_try = X.values * beta_try + off;
      Eigen::VectorXd mu_try = eta_try.unaryExpr([](double e) { return expit(e); });
      double ll_try = binomial_loglik(y, mu_try, w);
      if (ll_try >= ll - 1e-12) {
        m.coef = beta_try;
        eta = eta_try;
        mu = mu_try;
        ll = ll_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (loglik_trace) loglik_trace->push_back(ll);
    if (!accepted) break;  // no improving step: stop, report score state
  }
  Eigen::VectorXd score = X.values.transpose() * (w.cwiseProduct(y - mu));
  m.max_score = score.cwiseAbs().maxCoeff();
  // tolerate benign near-convergence; flag separation-style failures
  m.converged = m.max_score <= 1e-6 && m.coef.cwiseAbs().maxCoeff() < 30.0;
  return m;
}

Eigen::VectorXd predict(const FittedGlm& m, const DesignMatrix& X,
                        const Eigen::VectorXd& offset) {
  if (X.labels != m.labels)
    throw std::invalid_argument("design labels do not match fitted model");
  Eigen::VectorXd eta = X.values * m.coef;
  if (offset.size()) {
    if (offset.size() != eta.size()) throw std::invalid_argument("offset length mismatch");
    eta += offset;
  }
  if (m.family == GlmFamily::Gaussian) return eta;
  return eta.unaryExpr([](double e) { return clamp_prob(expit(e)); });
}

double fit_fluctuation(const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                       const Eigen::VectorXd& w, const Eigen::VectorXd& clever) {
  const Eigen::Index n = y.size();
  if (offset.size() != n || w.size() != n)
    throw std::invalid_argument("fluctuation dimension mismatch");
  if (!offset.allFinite()) throw std::invalid_argument("non-finite offset");
  Eigen::VectorXd h = clever.size() ? clever : Eigen::VectorXd::Ones(n);
  if (h.size() != n) throw std::invalid_argument("clever covariate length mismatch");
  if (w.sum() <= 0.0 || w.cwiseProduct(h).cwiseAbs().sum() <= 0.0) return 0.0;

  double eps = 0.0;
  auto loglik = [&](double e) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double mu = clamp_prob(expit(offset[i] + e * h[i]));
      ll += w[i] * (y[i] * std::log(mu) + (1.0 - y[i]) * std::log(1.0 - mu));
    }
    return ll;
  };
  double ll = loglik(eps);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double score = 0.0, info = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double mu = expit(offset[i] + eps * h[i]);
      score += w[i] * h[i] * (y[i] - mu);
      info += w[i] * h[i] * h[i] * mu * (1.0 - mu);
    }
    if (std::abs(score) <= std::max(kScoreTol, 1e-11 * w.sum())) return eps;
    if (info <= 1e-14) return eps;  // flat likelihood, nothing to fit
    double delta = score / info;
    double step = 1.0;
    for (int hh = 0; hh < 30; ++hh) {
      double ll_try = loglik(eps + step * delta);
      if (ll_try >= ll - 1e-12) {
        eps += step * delta;
        ll = ll_try;
        break;
      }
      step *= 0.5;
    }
  }
  return eps;
}

}  // namespace frontdoor
