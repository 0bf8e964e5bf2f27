#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "frontdoor/formula.hpp"

namespace frontdoor {

enum class GlmFamily { Gaussian, Binomial };

struct FittedGlm {
  GlmFamily family = GlmFamily::Gaussian;
  Eigen::VectorXd coef;
  std::vector<std::string> labels;
  bool converged = true;
  int iterations = 0;
  double max_score = 0.0;
  bool rank_deficient = false;
};

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }
// probability clamp used for all binomial predictions and logit transforms
inline double clamp_prob(double p) {
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

FittedGlm fit_ols(const DesignMatrix& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

// Weighted logistic IRLS with offset; y may be fractional in [0,1].
// loglik_trace, when given, receives the accepted log-likelihood after each
// iteration (nondecreasing by construction).
FittedGlm fit_logistic(const DesignMatrix& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w,
                       const Eigen::VectorXd& offset = Eigen::VectorXd(),
                       std::vector<double>* loglik_trace = nullptr);

Eigen::VectorXd predict(const FittedGlm& m, const DesignMatrix& X,
                        const Eigen::VectorXd& offset = Eigen::VectorXd());

// One-parameter logistic fluctuation: intercept-only when `clever` is empty,
// otherwise a no-intercept fit on the clever covariate. Returns epsilon-hat.
double fit_fluctuation(const Eigen::VectorXd& y, const Eigen::VectorXd& offset,
                       const Eigen::VectorXd& w,
                       const Eigen::VectorXd& clever = Eigen::VectorXd());

}  // namespace frontdoor
