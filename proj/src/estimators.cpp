#include "frontdoor/estimators.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace frontdoor {

namespace {

Eigen::VectorXd row_weights(const LongitudinalDataset& data) {
  return Eigen::Map<const Eigen::VectorXd>(data.weights().data(),
                                           static_cast<Eigen::Index>(data.n_rows()));
}

double weighted_mean(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return w.dot(v) / w.sum();
}

EstimateResult base_result(const std::string& id, const LongitudinalDataset& data,
                           const RegimeSpec& regime) {
  EstimateResult r;
  r.estimator = id;
  r.regime = regime;
  r.n = data.n_rows();
  return r;
}

void attach_inference(EstimateResult& res, const Eigen::VectorXd& centered,
                      const Eigen::VectorXd& w, double alpha) {
  res.alpha = alpha;
  WaldInterval wi = wald_interval(centered, w, res.psi_hat, alpha);
  res.se = wi.se;
  res.ci = std::make_pair(wi.lo, wi.hi);
  if (wi.degenerate) res.diagnostics.push_back("degenerate interval: zero EIF variance");
  res.eif_values.assign(centered.data(), centered.data() + centered.size());
  res.eif_mean = weighted_mean(centered, w);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double clamp01(double v) { return std::min(1.0 - 1e-12, std::max(1e-12, v)); }

// select per-row values from per-history vectors by each row's observed
// treatment history through time t-1 (t = 0 selects the single empty history)
Eigen::VectorXd select_by_history(const FittedNuisanceSet& set,
                                  const std::vector<Eigen::VectorXd>& by_hist, std::size_t t) {
  const std::size_t n = set.data().n_rows();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t h = t == 0 ? 0 : set.observed_history(i, t - 1);
    out[static_cast<Eigen::Index>(i)] = by_hist[h][static_cast<Eigen::Index>(i)];
  }
  return out;
}

}  // namespace

std::string EstimateResult::to_json() const {
  nlohmann::json j;
  j["estimator"] = estimator;
  j["psi"] = psi_hat;
  j["se"] = se ? nlohmann::json(*se) : nlohmann::json(nullptr);
  j["ci"] = ci ? nlohmann::json({ci->first, ci->second}) : nlohmann::json(nullptr);
  j["alpha"] = alpha;
  j["regime"] = regime.to_string();
  j["n"] = n;
  j["diagnostics"] = diagnostics;
  if (eif_mean) j["eif_mean"] = *eif_mean;
  return j.dump(2);
}

EstimateResult estimate_ipw1(const LongitudinalDataset& data, const NuisanceSpec& spec,
                             const RegimeSpec& regime) {
  FittedNuisanceSet set(data, spec, regime);
  EstimateResult res = base_result("ipw1", data, regime);
  res.diagnostics = set.diagnostics();
  const Eigen::VectorXd w = row_weights(data);
  std::size_t trunc = 0;
  Eigen::VectorXd W = compute_W(set, static_cast<int>(set.horizon()), &trunc);
  if (trunc) res.diagnostics.push_back("W truncated on " + std::to_string(trunc) + " rows");
  if (W.maxCoeff() <= 0.0)
    res.diagnostics.push_back("positivity: no rows follow the regime");
  Eigen::VectorXd term = compute_terminal_pseudo(set);
  res.psi_hat = weighted_mean(W.cwiseProduct(term), w);
  return res;
}

EstimateResult estimate_ipw2(const LongitudinalDataset& data, const NuisanceSpec& spec,
                             const RegimeSpec& regime, Ipw2Mode mode) {
  NuisanceSpec s = spec;
  s.h_mode = mode == Ipw2Mode::Direct ? HMode::Direct : HMode::Gamma;
  FittedNuisanceSet set(data, s, regime);
  EstimateResult res =
      base_result(mode == Ipw2Mode::Direct ? "ipw2a" : "ipw2b", data, regime);
  res.diagnostics = set.diagnostics();
  const Eigen::VectorXd w = row_weights(data);
  std::size_t trunc = 0;
  Eigen::VectorXd H = compute_H(set, static_cast<int>(set.horizon()), &trunc);
  if (trunc) res.diagnostics.push_back("H truncated on " + std::to_string(trunc) + " rows");
  res.psi_hat = weighted_mean(H.cwiseProduct(set.predict_qy_obs()), w);
  return res;
}

EstimateResult estimate_sr1(const LongitudinalDataset& data, const NuisanceSpec& spec,
                            const RegimeSpec& regime) {
  FittedNuisanceSet set(data, spec, regime);
  EstimateResult res = base_result("sr1", data, regime);
  res.diagnostics = set.diagnostics();
  auto q = sequential_Q(set);
  res.psi_hat = weighted_mean(q[0], row_weights(data));
  return res;
}

EstimateResult estimate_sr2(const LongitudinalDataset& data, const NuisanceSpec& spec,
                            const RegimeSpec& regime) {
  FittedNuisanceSet set(data, spec, regime);
  EstimateResult res = base_result("sr2", data, regime);
  res.diagnostics = set.diagnostics();
  auto r = sequential_R(set);
  res.psi_hat = weighted_mean(r.r_a0(), row_weights(data));
  return res;
}

EstimateResult estimate_onestep(const LongitudinalDataset& data, const NuisanceSpec& spec,
                                const RegimeSpec& regime, double alpha) {
  FittedNuisanceSet set(data, spec, regime);
  EstimateResult res = base_result("onestep", data, regime);
  res.diagnostics = set.diagnostics();
  const Eigen::VectorXd w = row_weights(data);
  EifBreakdown eif = compute_eif(set, /*psi_reference=*/0.0);
  // centered_total with reference 0 is the uncentered sum of EIF terms
  res.psi_hat = weighted_mean(eif.centered_total, w);
  Eigen::VectorXd centered = eif.centered_total.array() - res.psi_hat;
  attach_inference(res, centered, w, alpha);
  return res;
}

EstimateResult estimate_tmle(const LongitudinalDataset& data, const NuisanceSpec& spec,
                             const RegimeSpec& regime, double alpha) {
  FittedNuisanceSet set(data, spec, regime);
  EstimateResult res = base_result("tmle", data, regime);
  res.diagnostics = set.diagnostics();
  const std::size_t T = set.horizon();
  const std::size_t n = data.n_rows();
  const Eigen::VectorXd w = row_weights(data);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      data.outcome().data(), static_cast<Eigen::Index>(n));
  if (y.minCoeff() < 0.0 || y.maxCoeff() > 1.0)
    throw std::invalid_argument("TMLE requires Y in [0,1]");

  std::vector<Eigen::VectorXd> H(T + 2);  // H[t+1] = H_t, H[0] = H_{-1}
  std::size_t trunc = 0;
  for (int t = -1; t <= static_cast<int>(T); ++t) H[t + 1] = compute_H(set, t, &trunc);
  if (trunc) res.diagnostics.push_back("H truncated on " + std::to_string(trunc) + " rows");

  // Q_Y fluctuation: weighted intercept-only, weights H_T
  Eigen::VectorXd qy_obs = set.predict_qy_obs();
  Eigen::VectorXd qy_logit = qy_obs.unaryExpr([](double p) { return logit(clamp_prob(p)); });
  double eps_y = fit_fluctuation(y, qy_logit, w.cwiseProduct(H[T + 1]));
  res.diagnostics.push_back("eps_Y=" + fmt(eps_y));
  Eigen::VectorXd qy_star_obs =
      qy_logit.unaryExpr([&](double l) { return clamp_prob(expit(l + eps_y)); });

  // updated R-recursion seed: Q_Y* at every treatment history
  std::vector<Eigen::VectorXd> cur(std::size_t{1} << (T + 1));
  for (std::uint64_t h = 0; h < cur.size(); ++h) {
    Eigen::VectorXd p = set.predict_qy(h);
    cur[h] = p.unaryExpr(
        [&](double v) { return clamp_prob(expit(logit(clamp_prob(v)) + eps_y)); });
  }

  std::vector<std::vector<Eigen::VectorXd>> kappa_star(T + 1), pi_star(T + 1),
      r_a_star(T + 1);
  for (std::size_t t = T + 1; t-- > 0;) {
    const std::uint64_t n_hist = std::uint64_t{1} << (t + 1);
    kappa_star[t].resize(n_hist);
    for (std::uint64_t h = 0; h < n_hist; ++h)
      kappa_star[t][h] =
          sequential_fit_predict(set, spec.r[t], cur[h], t, spec.sequential_logistic);

    // propensity fluctuation with the R-contrast clever covariate
    Eigen::VectorXd at = Eigen::Map<const Eigen::VectorXd>(
        data.treatment(t).data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd clever(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t prev = t == 0 ? 0 : set.observed_history(i, t - 1);
      clever[static_cast<Eigen::Index>(i)] =
          kappa_star[t][prev | (std::uint64_t{1} << t)][static_cast<Eigen::Index>(i)] -
          kappa_star[t][prev][static_cast<Eigen::Index>(i)];
    }
    Eigen::VectorXd pi_obs = set.predict_pi_obs(t);
    Eigen::VectorXd pi_logit =
        pi_obs.unaryExpr([](double p) { return logit(clamp_prob(p)); });
    double eps_pi = fit_fluctuation(at, pi_logit, w.cwiseProduct(H[t]), clever);
    res.diagnostics.push_back("eps_pi_" + std::to_string(t) + "=" + fmt(eps_pi));

    const std::uint64_t n_prev = std::uint64_t{1} << t;
    pi_star[t].resize(n_prev);
    r_a_star[t].resize(n_prev);
    for (std::uint64_t hp = 0; hp < n_prev; ++hp) {
      Eigen::VectorXd p = set.predict_pi(t, hp);
      const Eigen::VectorXd& k1 = kappa_star[t][hp | (std::uint64_t{1} << t)];
      const Eigen::VectorXd& k0 = kappa_star[t][hp];
      Eigen::VectorXd p_star(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < p_star.size(); ++i)
        p_star[i] = clamp_prob(
            expit(logit(clamp_prob(p[i])) + eps_pi * (k1[i] - k0[i])));
      r_a_star[t][hp] = p_star.cwiseProduct(k1) +
                        ((1.0 - p_star.array()).matrix()).cwiseProduct(k0);
      pi_star[t][hp] = std::move(p_star);
    }
    cur = r_a_star[t];
  }

  // targeted terminal pseudo-outcome from Q_Y* and pi*
  Eigen::VectorXd qm_terminal = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::uint64_t h = 0; h < (std::uint64_t{1} << (T + 1)); ++h) {
    Eigen::VectorXd p = set.predict_qy(h);
    Eigen::VectorXd contrib = p.unaryExpr(
        [&](double v) { return clamp_prob(expit(logit(clamp_prob(v)) + eps_y)); });
    for (std::size_t t = 0; t <= T; ++t) {
      std::uint64_t prefix = h & ((std::uint64_t{1} << t) - 1);
      const Eigen::VectorXd& p1 = pi_star[t][prefix];
      int a_val = static_cast<int>((h >> t) & 1);
      for (Eigen::Index i = 0; i < contrib.size(); ++i)
        contrib[i] *= a_val ? p1[i] : 1.0 - p1[i];
    }
    qm_terminal += contrib;
  }

  // targeted W built from pi*
  std::vector<Eigen::VectorXd> w_star(T + 1);
  for (std::size_t t = 0; t <= T; ++t) {
    Eigen::VectorXd W = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k <= t; ++k) {
      std::uint64_t regime_prefix = 0;
      for (std::size_t b = 0; b < k; ++b)
        regime_prefix |= static_cast<std::uint64_t>(regime.values[b]) << b;
      const Eigen::VectorXd& p1 = pi_star[k][regime_prefix];
      for (Eigen::Index i = 0; i < W.size(); ++i) {
        double dens = regime.values[k] ? p1[i] : 1.0 - p1[i];
        W[i] /= dens;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!set.matches_regime(i, t)) W[static_cast<Eigen::Index>(i)] = 0.0;
    w_star[t] = W;
  }

  // sequential regressions on the targeted pseudo-outcomes, logistic family
  // so the intercept fluctuation acts on the logit scale
  std::vector<Eigen::VectorXd> q_star(T + 2);
  q_star[T + 1] = qm_terminal;
  Eigen::VectorXd pseudo = qm_terminal;
  for (std::size_t t = T + 1; t-- > 0;) {
    Eigen::VectorXd q_init =
        sequential_fit_predict(set, spec.qm[t], pseudo, t, /*logistic=*/true);
    Eigen::VectorXd off =
        q_init.unaryExpr([](double p) { return logit(clamp_prob(p)); });
    Eigen::VectorXd yq = pseudo.unaryExpr([](double v) { return clamp01(v); });
    Eigen::VectorXd fw = w.cwiseProduct(w_star[t]);
    double eps_m = 0.0;
    if (fw.sum() > 0.0) {
      eps_m = fit_fluctuation(yq, off, fw);
    } else {
      res.diagnostics.push_back("positivity: empty regime support at t=" +
                                std::to_string(t) + ", fluctuation skipped");
    }
    res.diagnostics.push_back("eps_M_" + std::to_string(t) + "=" + fmt(eps_m));
    q_star[t] = off.unaryExpr([&](double l) { return clamp_prob(expit(l + eps_m)); });
    pseudo = q_star[t];
  }

  res.psi_hat = weighted_mean(q_star[0], w);

  EifInputs in;
  in.y = y;
  in.qy_obs = qy_star_obs;
  in.h_top = H[T + 1];
  in.q = q_star;
  in.psi_reference = res.psi_hat;
  for (std::size_t t = 0; t <= T; ++t) {
    in.w.push_back(w_star[t]);
    in.h_prev.push_back(H[t]);
    Eigen::VectorXd rm_obs(static_cast<Eigen::Index>(n)), rm1(static_cast<Eigen::Index>(n)),
        rm0(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t prev = t == 0 ? 0 : set.observed_history(i, t - 1);
      std::uint64_t obs = set.observed_history(i, t);
      rm_obs[static_cast<Eigen::Index>(i)] = kappa_star[t][obs][static_cast<Eigen::Index>(i)];
      rm1[static_cast<Eigen::Index>(i)] =
          kappa_star[t][prev | (std::uint64_t{1} << t)][static_cast<Eigen::Index>(i)];
      rm0[static_cast<Eigen::Index>(i)] = kappa_star[t][prev][static_cast<Eigen::Index>(i)];
    }
    in.r_m_obs.push_back(std::move(rm_obs));
    in.r_m1.push_back(std::move(rm1));
    in.r_m0.push_back(std::move(rm0));
    in.r_a_obs.push_back(select_by_history(set, r_a_star[t], t));
    in.a_obs.push_back(Eigen::Map<const Eigen::VectorXd>(
        data.treatment(t).data(), static_cast<Eigen::Index>(n)));
    in.pi1_obs.push_back(select_by_history(set, pi_star[t], t));
  }
  EifBreakdown eif = assemble_eif(in);
  attach_inference(res, eif.centered_total, w, alpha);
  return res;
}

namespace {

// ---- mediator-density TMLE (binary M), fully tabulated over binary
// treatment/mediator histories ----

using Table = std::vector<std::vector<Eigen::VectorXd>>;  // [a_idx][m_idx] -> per-row

struct MedState {
  Table qy;                      // [2^{T+1}][2^{T+1}]
  std::vector<Table> pi;         // pi[t]: [2^t][2^t]
  std::vector<Table> g;          // g[t]:  [2^{t+1}][2^t]
};

std::map<std::string, double> am_overrides(std::uint64_t a_bits, std::size_t na,
                                           std::uint64_t m_bits, std::size_t nm) {
  std::map<std::string, double> ov;
  for (std::size_t k = 0; k < na; ++k)
    ov["A" + std::to_string(k)] = static_cast<double>((a_bits >> k) & 1);
  for (std::size_t k = 0; k < nm; ++k)
    ov["M" + std::to_string(k)] = static_cast<double>((m_bits >> k) & 1);
  return ov;
}

double dens(double p1, int value) { return value ? p1 : 1.0 - p1; }

}  // namespace

EstimateResult estimate_tmle_mediator(const LongitudinalDataset& data, const NuisanceSpec& spec,
                                      const RegimeSpec& regime, double alpha, int max_iters,
                                      double tol) {
  if (spec.g.empty())
    throw std::invalid_argument("mediator-density TMLE requires g formulas (binary M)");
  NuisanceSpec s = spec;
  s.h_mode = HMode::Direct;
  FittedNuisanceSet set(data, s, regime);
  EstimateResult res = base_result("tmle_med", data, regime);
  res.diagnostics = set.diagnostics();
  const std::size_t T = set.horizon();
  const std::size_t n = data.n_rows();
  if (T > 2) throw std::invalid_argument("mediator-density TMLE horizon cap (T <= 2) exceeded");
  const Eigen::VectorXd w = row_weights(data);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(
      data.outcome().data(), static_cast<Eigen::Index>(n));

  // observed mediator histories, packed like the treatment histories
  std::vector<std::vector<std::uint64_t>> obs_m(T + 1, std::vector<std::uint64_t>(n, 0));
  for (std::size_t t = 0; t <= T; ++t) {
    const auto& m = data.mediator(t);
    for (std::size_t i = 0; i < n; ++i)
      obs_m[t][i] = (t ? obs_m[t - 1][i] : 0) |
                    (static_cast<std::uint64_t>(m[i] != 0.0) << t);
  }
  auto obs_m_prefix = [&](std::size_t i, std::size_t t) -> std::uint64_t {
    return t == 0 ? 0 : obs_m[t - 1][i];
  };
  std::uint64_t regime_bits = 0;
  for (std::size_t t = 0; t <= T; ++t)
    regime_bits |= static_cast<std::uint64_t>(regime.values[t]) << t;

  // initial tables from the fitted models
  MedState st;
  st.qy.assign(std::size_t{1} << (T + 1),
               std::vector<Eigen::VectorXd>(std::size_t{1} << (T + 1)));
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << (T + 1)); ++a)
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << (T + 1)); ++m) {
      DesignMatrix X = build_design_matrix(s.qy, data, set.bindings(),
                                           am_overrides(a, T + 1, m, T + 1));
      st.qy[a][m] = predict(set.qy_fit(), X);
    }
  st.pi.resize(T + 1);
  st.g.resize(T + 1);
  for (std::size_t t = 0; t <= T; ++t) {
    st.pi[t].assign(std::size_t{1} << t, std::vector<Eigen::VectorXd>(std::size_t{1} << t));
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << t); ++a)
      for (std::uint64_t m = 0; m < (std::uint64_t{1} << t); ++m) {
        DesignMatrix X =
            build_design_matrix(s.pi[t], data, set.bindings(), am_overrides(a, t, m, t));
        st.pi[t][a][m] = predict(set.pi_fit(t), X);
      }
    st.g[t].assign(std::size_t{1} << (t + 1),
                   std::vector<Eigen::VectorXd>(std::size_t{1} << t));
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << (t + 1)); ++a)
      for (std::uint64_t m = 0; m < (std::uint64_t{1} << t); ++m) {
        DesignMatrix X =
            build_design_matrix(s.g[t], data, set.bindings(), am_overrides(a, t + 1, m, t));
        st.g[t][a][m] = predict(set.g_fit(t), X);
      }
  }

  auto compute_h = [&](int t) {
    Eigen::VectorXd H = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    for (int k = 0; k <= t; ++k) {
      const auto& mk = data.mediator(static_cast<std::size_t>(k));
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t mp = obs_m_prefix(i, static_cast<std::size_t>(k));
        std::uint64_t a_reg = regime_bits & ((std::uint64_t{1} << (k + 1)) - 1);
        std::uint64_t a_obs = set.observed_history(i, static_cast<std::size_t>(k));
        int mv = mk[i] != 0.0;
        double num = dens(st.g[k][a_reg][mp][static_cast<Eigen::Index>(i)], mv);
        double den = dens(st.g[k][a_obs][mp][static_cast<Eigen::Index>(i)], mv);
        H[static_cast<Eigen::Index>(i)] *= num / den;
      }
    }
    return H;
  };

  // One full pass; when fluctuate is false the epsilons stay zero and the
  // pass just evaluates the current state (used for max_iters = 0 and for
  // the final EIF evaluation).
  std::vector<Table> rm_tab(T + 1), ra_tab(T + 1);
  std::vector<std::vector<Eigen::VectorXd>> qm_tab(T + 2);
  std::vector<Eigen::VectorXd> w_cur(T + 1);
  auto pass = [&](bool fluctuate) -> double {
    double max_eps = 0.0;
    // outcome update
    Eigen::VectorXd H_top = compute_h(static_cast<int>(T));
    if (fluctuate) {
      Eigen::VectorXd off(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        off[static_cast<Eigen::Index>(i)] = logit(clamp_prob(
            st.qy[set.observed_history(i, T)][obs_m[T][i]][static_cast<Eigen::Index>(i)]));
      double eps_y = fit_fluctuation(y, off, w.cwiseProduct(H_top));
      max_eps = std::max(max_eps, std::abs(eps_y));
      for (auto& row : st.qy)
        for (auto& v : row)
          v = v.unaryExpr(
              [&](double p) { return clamp_prob(expit(logit(clamp_prob(p)) + eps_y)); });
    }
    // R recursions with propensity updates
    Table ra = st.qy;  // R_{A_{T+1}}
    for (std::size_t t = T + 1; t-- > 0;) {
      const std::uint64_t na = std::uint64_t{1} << (t + 1);
      const std::uint64_t nm = std::uint64_t{1} << t;
      Table rm(na, std::vector<Eigen::VectorXd>(nm));
      std::uint64_t a_reg = regime_bits & (na - 1);
      for (std::uint64_t a = 0; a < na; ++a)
        for (std::uint64_t m = 0; m < nm; ++m) {
          Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
          for (int mt = 0; mt <= 1; ++mt) {
            const Eigen::VectorXd& next =
                ra[a][m | (static_cast<std::uint64_t>(mt) << t)];
            const Eigen::VectorXd& g1 = st.g[t][a_reg][m];
            for (Eigen::Index i = 0; i < acc.size(); ++i)
              acc[i] += next[i] * dens(g1[i], mt);
          }
          rm[a][m] = std::move(acc);
        }
      rm_tab[t] = rm;
      if (fluctuate) {
        Eigen::VectorXd at = Eigen::Map<const Eigen::VectorXd>(
            data.treatment(t).data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd clever(static_cast<Eigen::Index>(n)),
            off(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
          std::uint64_t ap = t == 0 ? 0 : set.observed_history(i, t - 1);
          std::uint64_t mp = obs_m_prefix(i, t);
          clever[static_cast<Eigen::Index>(i)] =
              rm[ap | (std::uint64_t{1} << t)][mp][static_cast<Eigen::Index>(i)] -
              rm[ap][mp][static_cast<Eigen::Index>(i)];
          off[static_cast<Eigen::Index>(i)] =
              logit(clamp_prob(st.pi[t][ap][mp][static_cast<Eigen::Index>(i)]));
        }
        Eigen::VectorXd H_prev = compute_h(static_cast<int>(t) - 1);
        double eps_pi = fit_fluctuation(at, off, w.cwiseProduct(H_prev), clever);
        max_eps = std::max(max_eps, std::abs(eps_pi));
        for (std::uint64_t a = 0; a < (std::uint64_t{1} << t); ++a)
          for (std::uint64_t m = 0; m < (std::uint64_t{1} << t); ++m) {
            Eigen::VectorXd& p = st.pi[t][a][m];
            const Eigen::VectorXd& r1 = rm[a | (std::uint64_t{1} << t)][m];
            const Eigen::VectorXd& r0 = rm[a][m];
            for (Eigen::Index i = 0; i < p.size(); ++i)
              p[i] = clamp_prob(
                  expit(logit(clamp_prob(p[i])) + eps_pi * (r1[i] - r0[i])));
          }
      }
      Table ra_next(std::size_t{1} << t, std::vector<Eigen::VectorXd>(nm));
      for (std::uint64_t a = 0; a < (std::uint64_t{1} << t); ++a)
        for (std::uint64_t m = 0; m < nm; ++m) {
          const Eigen::VectorXd& p = st.pi[t][a][m];
          const Eigen::VectorXd& r1 = rm[a | (std::uint64_t{1} << t)][m];
          const Eigen::VectorXd& r0 = rm[a][m];
          ra_next[a][m] =
              p.cwiseProduct(r1) + ((1.0 - p.array()).matrix()).cwiseProduct(r0);
        }
      ra_tab[t] = ra_next;
      ra = std::move(ra_next);
    }
    // terminal Q and mediator-density updates
    qm_tab[T + 1].assign(std::size_t{1} << (T + 1),
                         Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << (T + 1)); ++m) {
      for (std::uint64_t a = 0; a < (std::uint64_t{1} << (T + 1)); ++a) {
        Eigen::VectorXd contrib = st.qy[a][m];
        for (std::size_t t = 0; t <= T; ++t) {
          std::uint64_t ap = a & ((std::uint64_t{1} << t) - 1);
          std::uint64_t mp = m & ((std::uint64_t{1} << t) - 1);
          const Eigen::VectorXd& p = st.pi[t][ap][mp];
          int av = static_cast<int>((a >> t) & 1);
          for (Eigen::Index i = 0; i < contrib.size(); ++i) contrib[i] *= dens(p[i], av);
        }
        qm_tab[T + 1][m] += contrib;
      }
    }
    for (std::size_t t = T + 1; t-- > 0;) {
      // W from current pi (post-update at times <= t handled by pass order)
      Eigen::VectorXd W = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
      for (std::size_t k = 0; k <= t; ++k) {
        std::uint64_t a_reg_prefix = regime_bits & ((std::uint64_t{1} << k) - 1);
        for (std::size_t i = 0; i < n; ++i) {
          std::uint64_t mp = obs_m_prefix(i, k);
          W[static_cast<Eigen::Index>(i)] /= dens(
              st.pi[k][a_reg_prefix][mp][static_cast<Eigen::Index>(i)], regime.values[k]);
        }
      }
      for (std::size_t i = 0; i < n; ++i)
        if (!set.matches_regime(i, t)) W[static_cast<Eigen::Index>(i)] = 0.0;
      w_cur[t] = W;
      if (fluctuate) {
        Eigen::VectorXd mt = Eigen::Map<const Eigen::VectorXd>(
            data.mediator(t).data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd clever(static_cast<Eigen::Index>(n)),
            off(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
          std::uint64_t mp = obs_m_prefix(i, t);
          clever[static_cast<Eigen::Index>(i)] =
              qm_tab[t + 1][mp | (std::uint64_t{1} << t)][static_cast<Eigen::Index>(i)] -
              qm_tab[t + 1][mp][static_cast<Eigen::Index>(i)];
          off[static_cast<Eigen::Index>(i)] = logit(clamp_prob(
              st.g[t][set.observed_history(i, t)][mp][static_cast<Eigen::Index>(i)]));
        }
        double eps_g = fit_fluctuation(mt, off, w.cwiseProduct(W), clever);
        max_eps = std::max(max_eps, std::abs(eps_g));
        for (std::uint64_t a = 0; a < (std::uint64_t{1} << (t + 1)); ++a)
          for (std::uint64_t m = 0; m < (std::uint64_t{1} << t); ++m) {
            Eigen::VectorXd& p = st.g[t][a][m];
            const Eigen::VectorXd& c1 = qm_tab[t + 1][m | (std::uint64_t{1} << t)];
            const Eigen::VectorXd& c0 = qm_tab[t + 1][m];
            for (Eigen::Index i = 0; i < p.size(); ++i)
              p[i] = clamp_prob(
                  expit(logit(clamp_prob(p[i])) + eps_g * (c1[i] - c0[i])));
          }
      }
      std::uint64_t a_reg = regime_bits & ((std::uint64_t{1} << (t + 1)) - 1);
      qm_tab[t].assign(std::size_t{1} << t,
                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
      for (std::uint64_t m = 0; m < (std::uint64_t{1} << t); ++m) {
        for (int mv = 0; mv <= 1; ++mv) {
          const Eigen::VectorXd& next = qm_tab[t + 1][m | (static_cast<std::uint64_t>(mv) << t)];
          const Eigen::VectorXd& g1 = st.g[t][a_reg][m];
          for (Eigen::Index i = 0; i < next.size(); ++i)
            qm_tab[t][m][i] += next[i] * dens(g1[i], mv);
        }
      }
    }
    return max_eps;
  };

  bool converged = false;
  int iters = 0;
  if (max_iters == 0) {
    pass(false);
    res.diagnostics.push_back("max_iters=0: plug-in of the un-fluctuated sequence");
  } else {
    for (iters = 1; iters <= max_iters; ++iters) {
      double max_eps = pass(true);
      res.diagnostics.push_back("iter " + std::to_string(iters) +
                                ": max|eps|=" + fmt(max_eps));
      if (max_eps < tol) {
        converged = true;
        break;
      }
    }
    if (!converged)
      res.diagnostics.push_back("did not converge within " + std::to_string(max_iters) +
                                " iterations");
    pass(false);  // evaluation pass at the final state
  }

  res.psi_hat = weighted_mean(qm_tab[0][0], w);

  EifInputs in;
  in.y = y;
  Eigen::VectorXd qy_obs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    qy_obs[static_cast<Eigen::Index>(i)] =
        st.qy[set.observed_history(i, T)][obs_m[T][i]][static_cast<Eigen::Index>(i)];
  in.qy_obs = qy_obs;
  in.h_top = compute_h(static_cast<int>(T));
  in.psi_reference = res.psi_hat;
  for (std::size_t t = 0; t <= T + 1; ++t) {
    Eigen::VectorXd q(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t m_idx = t == 0 ? 0 : obs_m[t - 1][i];
      q[static_cast<Eigen::Index>(i)] = qm_tab[t][m_idx][static_cast<Eigen::Index>(i)];
    }
    in.q.push_back(std::move(q));
  }
  for (std::size_t t = 0; t <= T; ++t) {
    in.w.push_back(w_cur[t]);
    in.h_prev.push_back(compute_h(static_cast<int>(t) - 1));
    Eigen::VectorXd rm_obs(static_cast<Eigen::Index>(n)), rm1(static_cast<Eigen::Index>(n)),
        rm0(static_cast<Eigen::Index>(n)), ra_obs(static_cast<Eigen::Index>(n)),
        pi1(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t ap = t == 0 ? 0 : set.observed_history(i, t - 1);
      std::uint64_t a_full = set.observed_history(i, t);
      std::uint64_t mp = obs_m_prefix(i, t);
      rm_obs[static_cast<Eigen::Index>(i)] = rm_tab[t][a_full][mp][static_cast<Eigen::Index>(i)];
      rm1[static_cast<Eigen::Index>(i)] =
          rm_tab[t][ap | (std::uint64_t{1} << t)][mp][static_cast<Eigen::Index>(i)];
      rm0[static_cast<Eigen::Index>(i)] = rm_tab[t][ap][mp][static_cast<Eigen::Index>(i)];
      ra_obs[static_cast<Eigen::Index>(i)] = ra_tab[t][ap][mp][static_cast<Eigen::Index>(i)];
      pi1[static_cast<Eigen::Index>(i)] = st.pi[t][ap][mp][static_cast<Eigen::Index>(i)];
    }
    in.r_m_obs.push_back(std::move(rm_obs));
    in.r_m1.push_back(std::move(rm1));
    in.r_m0.push_back(std::move(rm0));
    in.r_a_obs.push_back(std::move(ra_obs));
    in.a_obs.push_back(Eigen::Map<const Eigen::VectorXd>(
        data.treatment(t).data(), static_cast<Eigen::Index>(n)));
    in.pi1_obs.push_back(std::move(pi1));
  }
  EifBreakdown eif = assemble_eif(in);
  attach_inference(res, eif.centered_total, w, alpha);
  return res;
}

EstimateResult run_estimator(const std::string& id, const LongitudinalDataset& data,
                             const NuisanceSpec& spec, const RegimeSpec& regime,
                             double alpha) {
  if (id == "ipw1") return estimate_ipw1(data, spec, regime);
  if (id == "ipw2a") return estimate_ipw2(data, spec, regime, Ipw2Mode::Direct);
  if (id == "ipw2b") return estimate_ipw2(data, spec, regime, Ipw2Mode::Gamma);
  if (id == "sr1") return estimate_sr1(data, spec, regime);
  if (id == "sr2") return estimate_sr2(data, spec, regime);
  if (id == "onestep") return estimate_onestep(data, spec, regime, alpha);
  if (id == "tmle") return estimate_tmle(data, spec, regime, alpha);
  if (id == "tmle_med") return estimate_tmle_mediator(data, spec, regime, alpha);
  throw std::invalid_argument("unknown estimator id: " + id);
}

}  // namespace frontdoor
