#include "frontdoor/inference.hpp"

#include <cmath>
#include <stdexcept>

namespace frontdoor {

EifBreakdown assemble_eif(const EifInputs& in) {
  const Eigen::Index n = in.y.size();
  const std::size_t T1 = in.w.size();  // T+1 time points
  if (T1 == 0) throw std::invalid_argument("no time points");
  if (in.q.size() != T1 + 1) throw std::invalid_argument("Q-sequence length mismatch");

  EifBreakdown out;
  out.psi_reference = in.psi_reference;
  out.d_y = in.h_top.cwiseProduct(in.y - in.qy_obs);
  out.plug_in = in.q[0];

  for (std::size_t t = 0; t < T1; ++t) {
    out.d_m.push_back(in.w[t].cwiseProduct(in.q[t + 1] - in.q[t]));
    Eigen::VectorXd direct = in.h_prev[t].cwiseProduct(in.r_m_obs[t] - in.r_a_obs[t]);
    Eigen::VectorXd clever =
        in.h_prev[t]
            .cwiseProduct(in.r_m1[t] - in.r_m0[t])
            .cwiseProduct(in.a_obs[t] - in.pi1_obs[t]);
    double disc = (direct - clever).cwiseAbs().maxCoeff();
    out.max_form_discrepancy = std::max(out.max_form_discrepancy, disc);
    if (disc > 1e-10)
      throw std::logic_error("treatment-term EIF representations disagree beyond 1e-10");
    out.d_a.push_back(std::move(direct));
  }

  // fixed accumulation order: Y term, M terms ascending, A terms ascending,
  // plug-in, minus the reference
  out.centered_total = out.d_y;
  for (const auto& v : out.d_m) out.centered_total += v;
  for (const auto& v : out.d_a) out.centered_total += v;
  out.centered_total += out.plug_in;
  out.centered_total.array() -= in.psi_reference;
  (void)n;
  return out;
}

EifBreakdown compute_eif(const FittedNuisanceSet& set, double psi_reference) {
  const std::size_t T = set.horizon();
  EifInputs in;
  in.psi_reference = psi_reference;
  const auto& data = set.data();
  in.y = Eigen::Map<const Eigen::VectorXd>(data.outcome().data(),
                                           static_cast<Eigen::Index>(data.n_rows()));
  in.qy_obs = set.predict_qy_obs();
  in.h_top = compute_H(set, static_cast<int>(T));
  auto q = sequential_Q(set);
  auto r = sequential_R(set);
  for (std::size_t t = 0; t <= T; ++t) {
    in.w.push_back(compute_W(set, static_cast<int>(t)));
    in.h_prev.push_back(compute_H(set, static_cast<int>(t) - 1));
    in.r_m_obs.push_back(r.r_m_obs(set, t));
    in.r_a_obs.push_back(r.r_a_obs(set, t));
    in.r_m1.push_back(r.r_m_at(set, t, 1));
    in.r_m0.push_back(r.r_m_at(set, t, 0));
    in.a_obs.push_back(Eigen::Map<const Eigen::VectorXd>(
        data.treatment(t).data(), static_cast<Eigen::Index>(data.n_rows())));
    in.pi1_obs.push_back(set.predict_pi_obs(t));
  }
  in.q = std::move(q);
  return assemble_eif(in);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile probability outside (0,1)");
  // Acklam's rational approximation followed by Newton refinement against
  // the erfc-based CDF.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= phigh) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  for (int i = 0; i < 2; ++i) {
    double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    x -= (cdf - p) / pdf;
  }
  return x;
}

WaldInterval wald_interval(const Eigen::VectorXd& eif_values, const Eigen::VectorXd& weights,
                           double psi_hat, double alpha) {
  const Eigen::Index n = eif_values.size();
  if (n < 2) throw std::invalid_argument("need at least 2 rows for a Wald interval");
  Eigen::VectorXd w = weights.size() ? weights : Eigen::VectorXd::Ones(n);
  if (w.size() != n) throw std::invalid_argument("weight length mismatch");
  double wsum = w.sum();
  double mean = w.dot(eif_values) / wsum;
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = eif_values[i] - mean;
    ss += w[i] * d * d;
  }
  double var = (ss / wsum) * (static_cast<double>(n) / (static_cast<double>(n) - 1.0));
  WaldInterval out;
  out.se = std::sqrt(var / static_cast<double>(n));
  // rounding in the mean subtraction leaves O(eps) residuals on constant
  // input; treat those as exactly zero variance
  double scale = eif_values.cwiseAbs().maxCoeff();
  if (out.se <= 1e-12 * std::max(1.0, scale)) {
    out.se = 0.0;
    out.degenerate = true;
  }
  double z = normal_quantile(1.0 - alpha / 2.0);
  out.lo = psi_hat - z * out.se;
  out.hi = psi_hat + z * out.se;
  return out;
}

}  // namespace frontdoor
