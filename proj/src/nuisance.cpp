#include "frontdoor/nuisance.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace frontdoor {

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::map<std::string, double> history_overrides(std::uint64_t a_hist, std::size_t count) {
  std::map<std::string, double> ov;
  for (std::size_t k = 0; k < count; ++k)
    ov["A" + std::to_string(k)] = static_cast<double>((a_hist >> k) & 1);
  return ov;
}

}  // namespace

void NuisanceSpec::validate(std::size_t data_horizon) const {
  const std::size_t T = data_horizon;
  if (pi.size() != T + 1) throw std::invalid_argument("spec horizon mismatch: pi");
  if (!g.empty() && g.size() != T + 1) throw std::invalid_argument("spec horizon mismatch: g");
  if (qm.size() != T + 1) throw std::invalid_argument("spec horizon mismatch: qm");
  if (r.size() != T + 1) throw std::invalid_argument("spec horizon mismatch: r");
  if (h_mode == HMode::Gamma) {
    if (gamma1.size() != T + 1 || gamma2.size() != T + 1)
      throw std::invalid_argument("gamma-ratio H mode requires gamma formulas");
    for (std::size_t t = 0; t <= T; ++t)
      if (gamma1[t].size() != t + 1 || gamma2[t].size() != t + 1)
        throw std::invalid_argument("gamma formula lists must have t+1 entries at time t");
  } else if (g.empty()) {
    throw std::invalid_argument("direct H mode requires g formulas");
  }
  if (truncate && !(*truncate > 0.0))
    throw std::invalid_argument("truncation bound must be positive");
}

std::string NuisanceSpec::to_json() const {
  nlohmann::json j;
  auto put = [](const Formula& f) { return f.source().empty() ? f.print() : f.source(); };
  auto put_list = [&](const std::vector<Formula>& fs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : fs) a.push_back(put(f));
    return a;
  };
  j["pi"] = put_list(pi);
  if (!g.empty()) j["g"] = put_list(g);
  if (!gamma1.empty()) {
    nlohmann::json g1 = nlohmann::json::array(), g2 = nlohmann::json::array();
    for (const auto& row : gamma1) g1.push_back(put_list(row));
    for (const auto& row : gamma2) g2.push_back(put_list(row));
    j["gamma1"] = g1;
    j["gamma2"] = g2;
  }
  j["qy"] = put(qy);
  j["qm"] = put_list(qm);
  j["r"] = put_list(r);
  j["h_mode"] = h_mode == HMode::Direct ? "direct" : "gamma";
  j["truncate"] = truncate ? nlohmann::json(*truncate) : nlohmann::json(nullptr);
  return j.dump(2);
}

NuisanceSpec NuisanceSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  NuisanceSpec s;
  auto get_list = [](const nlohmann::json& a) {
    std::vector<Formula> out;
    for (const auto& e : a) out.push_back(Formula::parse(e.get<std::string>()));
    return out;
  };
  s.pi = get_list(j.at("pi"));
  if (j.contains("g") && !j["g"].is_null()) s.g = get_list(j["g"]);
  if (j.contains("gamma1") && !j["gamma1"].is_null()) {
    for (const auto& row : j["gamma1"]) s.gamma1.push_back(get_list(row));
    for (const auto& row : j.at("gamma2")) s.gamma2.push_back(get_list(row));
  }
  s.qy = Formula::parse(j.at("qy").get<std::string>());
  s.qm = get_list(j.at("qm"));
  s.r = get_list(j.at("r"));
  std::string mode = j.value("h_mode", std::string("direct"));
  if (mode == "direct")
    s.h_mode = HMode::Direct;
  else if (mode == "gamma")
    s.h_mode = HMode::Gamma;
  else
    throw std::invalid_argument("h_mode must be 'direct' or 'gamma'");
  if (j.contains("truncate") && !j["truncate"].is_null())
    s.truncate = j["truncate"].get<double>();
  if (j.contains("sequential_logistic")) s.sequential_logistic = j["sequential_logistic"];
  return s;
}

FittedNuisanceSet::FittedNuisanceSet(const LongitudinalDataset& data, NuisanceSpec spec,
                                     RegimeSpec regime)
    : data_(&data), spec_(std::move(spec)), regime_(std::move(regime)) {
  const std::size_t T = data.horizon();
  if (regime_.values.size() != T + 1)
    throw std::invalid_argument("regime length does not match data horizon");
  spec_.validate(T);
  bindings_ = default_bindings(data);
  const Eigen::VectorXd w = to_eigen(data.weights());

  auto fit_component = [&](const std::string& what, const Formula& f,
                           const Eigen::VectorXd& y) {
    FittedGlm fit;
    try {
      DesignMatrix X = build_design_matrix(f, data, bindings_);
      fit = fit_logistic(X, y, w);
    } catch (const std::exception& e) {
      throw std::runtime_error("fitting " + what + ": " + e.what());
    }
    if (!fit.converged)
      diagnostics_.push_back(what + ": logistic fit did not converge (possible separation)");
    if (fit.rank_deficient) diagnostics_.push_back(what + ": rank-deficient design");
    return fit;
  };

  for (std::size_t t = 0; t <= T; ++t)
    pi_fits_.push_back(
        fit_component("pi_" + std::to_string(t), spec_.pi[t], to_eigen(data.treatment(t))));
  if (!spec_.g.empty())
    for (std::size_t t = 0; t <= T; ++t)
      g_fits_.push_back(
          fit_component("g_" + std::to_string(t), spec_.g[t], to_eigen(data.mediator(t))));
  // the gamma classifiers are only consulted when H is built from density
  // ratios, so skip fitting them otherwise
  if (!spec_.gamma1.empty() && spec_.h_mode == HMode::Gamma) {
    gamma1_fits_.resize(T + 1);
    gamma2_fits_.resize(T + 1);
    for (std::size_t t = 0; t <= T; ++t)
      for (std::size_t j = 0; j <= t; ++j) {
        std::string tag = "_" + std::to_string(j) + "_" + std::to_string(t);
        gamma1_fits_[t].push_back(fit_component("gamma1" + tag, spec_.gamma1[t][j],
                                                to_eigen(data.treatment(j))));
        gamma2_fits_[t].push_back(fit_component("gamma2" + tag, spec_.gamma2[t][j],
                                                to_eigen(data.treatment(j))));
      }
  }
  qy_fit_ = fit_component("Q_Y", spec_.qy, to_eigen(data.outcome()));

  obs_hist_.assign(T + 1, std::vector<std::uint64_t>(data.n_rows(), 0));
  for (std::size_t t = 0; t <= T; ++t) {
    const auto& a = data.treatment(t);
    for (std::size_t i = 0; i < data.n_rows(); ++i) {
      std::uint64_t prev = t ? obs_hist_[t - 1][i] : 0;
      obs_hist_[t][i] = prev | (static_cast<std::uint64_t>(a[i] != 0.0) << t);
    }
  }
}

std::uint64_t FittedNuisanceSet::observed_history(std::size_t row, std::size_t t) const {
  return obs_hist_[t][row];
}

bool FittedNuisanceSet::matches_regime(std::size_t row, std::size_t t) const {
  std::uint64_t target = 0;
  for (std::size_t k = 0; k <= t; ++k)
    target |= static_cast<std::uint64_t>(regime_.values[k]) << k;
  return obs_hist_[t][row] == target;
}

Eigen::VectorXd FittedNuisanceSet::predict_binary_model(const FittedGlm& fit, const Formula& f,
                                                        std::uint64_t a_hist,
                                                        std::size_t n_a_override) const {
  DesignMatrix X =
      build_design_matrix(f, *data_, bindings_, history_overrides(a_hist, n_a_override));
  return predict(fit, X);
}

Eigen::VectorXd FittedNuisanceSet::predict_pi(std::size_t t, std::uint64_t a_hist) const {
  return predict_binary_model(pi_fits_[t], spec_.pi[t], a_hist, t);
}

Eigen::VectorXd FittedNuisanceSet::predict_pi_obs(std::size_t t) const {
  DesignMatrix X = build_design_matrix(spec_.pi[t], *data_, bindings_);
  return predict(pi_fits_[t], X);
}

Eigen::VectorXd FittedNuisanceSet::predict_qy(std::uint64_t a_hist) const {
  return predict_binary_model(qy_fit_, spec_.qy, a_hist, horizon() + 1);
}

Eigen::VectorXd FittedNuisanceSet::predict_qy_obs() const {
  DesignMatrix X = build_design_matrix(spec_.qy, *data_, bindings_);
  return predict(qy_fit_, X);
}

Eigen::VectorXd FittedNuisanceSet::predict_g(std::size_t t, bool regime_treatments) const {
  if (!has_g()) throw std::logic_error("no mediator density fits in this set");
  if (!regime_treatments) {
    DesignMatrix X = build_design_matrix(spec_.g[t], *data_, bindings_);
    return predict(g_fits_[t], X);
  }
  std::uint64_t hist = 0;
  for (std::size_t k = 0; k <= t; ++k)
    hist |= static_cast<std::uint64_t>(regime_.values[k]) << k;
  return predict_binary_model(g_fits_[t], spec_.g[t], hist, t + 1);
}

Eigen::VectorXd FittedNuisanceSet::gamma1_density(std::size_t t, std::size_t j,
                                                  std::uint64_t a_hist) const {
  Eigen::VectorXd p = predict_binary_model(gamma1_fits_[t][j], spec_.gamma1[t][j], a_hist, j);
  double aj = static_cast<double>((a_hist >> j) & 1);
  return aj != 0.0 ? p : (1.0 - p.array()).matrix();
}

Eigen::VectorXd FittedNuisanceSet::gamma2_density(std::size_t t, std::size_t j,
                                                  std::uint64_t a_hist) const {
  Eigen::VectorXd p = predict_binary_model(gamma2_fits_[t][j], spec_.gamma2[t][j], a_hist, j);
  double aj = static_cast<double>((a_hist >> j) & 1);
  return aj != 0.0 ? p : (1.0 - p.array()).matrix();
}

Eigen::VectorXd FittedNuisanceSet::gamma1_density_obs(std::size_t t, std::size_t j) const {
  DesignMatrix X = build_design_matrix(spec_.gamma1[t][j], *data_, bindings_);
  Eigen::VectorXd p = predict(gamma1_fits_[t][j], X);
  const auto& aj = data_->treatment(j);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (aj[static_cast<std::size_t>(i)] == 0.0) p[i] = 1.0 - p[i];
  return p;
}

Eigen::VectorXd FittedNuisanceSet::gamma2_density_obs(std::size_t t, std::size_t j) const {
  DesignMatrix X = build_design_matrix(spec_.gamma2[t][j], *data_, bindings_);
  Eigen::VectorXd p = predict(gamma2_fits_[t][j], X);
  const auto& aj = data_->treatment(j);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (aj[static_cast<std::size_t>(i)] == 0.0) p[i] = 1.0 - p[i];
  return p;
}

FittedNuisanceSet fit_nuisance_set(const LongitudinalDataset& data, const NuisanceSpec& spec,
                                   const RegimeSpec& regime) {
  return FittedNuisanceSet(data, spec, regime);
}

Eigen::VectorXd compute_H(const FittedNuisanceSet& set, int t, std::size_t* truncation_hits) {
  const std::size_t n = set.data().n_rows();
  Eigen::VectorXd H = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  if (t < 0) return H;
  if (static_cast<std::size_t>(t) > set.horizon()) throw std::invalid_argument("t > horizon");

  if (set.spec().h_mode == HMode::Direct) {
    for (int k = 0; k <= t; ++k) {
      Eigen::VectorXd p_reg = set.predict_g(static_cast<std::size_t>(k), true);
      Eigen::VectorXd p_obs = set.predict_g(static_cast<std::size_t>(k), false);
      const auto& m = set.data().mediator(static_cast<std::size_t>(k));
      for (std::size_t i = 0; i < n; ++i) {
        double num = m[i] != 0.0 ? p_reg[static_cast<Eigen::Index>(i)]
                                 : 1.0 - p_reg[static_cast<Eigen::Index>(i)];
        double den = m[i] != 0.0 ? p_obs[static_cast<Eigen::Index>(i)]
                                 : 1.0 - p_obs[static_cast<Eigen::Index>(i)];
        H[static_cast<Eigen::Index>(i)] *= num / den;
      }
    }
  } else {
    for (int k = 0; k <= t; ++k) {
      for (int j = 0; j <= k; ++j) {
        std::uint64_t regime_hist = 0;
        for (int b = 0; b <= j; ++b)
          regime_hist |= static_cast<std::uint64_t>(set.regime().values[b]) << b;
        Eigen::VectorXd n1 = set.gamma1_density(k, j, regime_hist);
        Eigen::VectorXd n2 = set.gamma2_density(k, j, regime_hist);
        Eigen::VectorXd n3 = set.gamma2_density_obs(k, j);
        Eigen::VectorXd n4 = set.gamma1_density_obs(k, j);
        H.array() *= n1.array() / n2.array() * n3.array() / n4.array();
      }
    }
  }
  if (set.spec().truncate) {
    double bound = *set.spec().truncate;
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < H.size(); ++i)
      if (H[i] > bound) {
        H[i] = bound;
        ++hits;
      }
    if (truncation_hits) *truncation_hits += hits;
  }
  for (Eigen::Index i = 0; i < H.size(); ++i)
    if (!(H[i] > 0.0)) throw std::logic_error("nonpositive H weight");
  return H;
}

Eigen::VectorXd compute_W(const FittedNuisanceSet& set, int t, std::size_t* truncation_hits) {
  const std::size_t n = set.data().n_rows();
  Eigen::VectorXd W = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  if (t < 0) return W;
  if (static_cast<std::size_t>(t) > set.horizon()) throw std::invalid_argument("t > horizon");

  for (int k = 0; k <= t; ++k) {
    std::uint64_t regime_hist = 0;
    for (int b = 0; b < k; ++b)
      regime_hist |= static_cast<std::uint64_t>(set.regime().values[b]) << b;
    Eigen::VectorXd p = set.predict_pi(static_cast<std::size_t>(k), regime_hist);
    int ak = set.regime().values[k];
    for (std::size_t i = 0; i < n; ++i) {
      double dens = ak ? p[static_cast<Eigen::Index>(i)] : 1.0 - p[static_cast<Eigen::Index>(i)];
      W[static_cast<Eigen::Index>(i)] /= dens;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!set.matches_regime(i, static_cast<std::size_t>(t)))
      W[static_cast<Eigen::Index>(i)] = 0.0;
  if (set.spec().truncate) {
    double bound = *set.spec().truncate;
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < W.size(); ++i)
      if (W[i] > bound) {
        W[i] = bound;
        ++hits;
      }
    if (truncation_hits) *truncation_hits += hits;
  }
  return W;
}

Eigen::VectorXd compute_terminal_pseudo(const FittedNuisanceSet& set) {
  const std::size_t T = set.horizon();
  const std::size_t n = set.data().n_rows();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const std::uint64_t n_hist = std::uint64_t{1} << (T + 1);
  for (std::uint64_t h = 0; h < n_hist; ++h) {
    Eigen::VectorXd contrib = set.predict_qy(h);
    for (std::size_t t = 0; t <= T; ++t) {
      Eigen::VectorXd p = set.predict_pi(t, h);  // bits above t-1 ignored by the design
      int at = static_cast<int>((h >> t) & 1);
      for (Eigen::Index i = 0; i < contrib.size(); ++i)
        contrib[i] *= at ? p[i] : 1.0 - p[i];
    }
    out += contrib;
  }
  return out;
}

namespace {
constexpr double kPseudoClamp = 1e-6;
}  // namespace

Eigen::VectorXd sequential_fit_predict(const FittedNuisanceSet& set, const Formula& f,
                                       const Eigen::VectorXd& pseudo, std::size_t t,
                                       bool logistic) {
  const auto& data = set.data();
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
      data.weights().data(), static_cast<Eigen::Index>(data.weights().size()));
  // fit among rows following the regime through time t; the model's
  // covariate list need not mention the treatments
  for (std::size_t i = 0; i < data.n_rows(); ++i)
    if (!set.matches_regime(i, t)) w[static_cast<Eigen::Index>(i)] = 0.0;
  DesignMatrix X = build_design_matrix(f, data, set.bindings());
  std::uint64_t regime_hist = 0;
  for (std::size_t k = 0; k <= t; ++k)
    regime_hist |= static_cast<std::uint64_t>(set.regime().values[k]) << k;
  DesignMatrix X_at = build_design_matrix(f, data, set.bindings(),
                                          history_overrides(regime_hist, t + 1));
  if (logistic) {
    Eigen::VectorXd y = pseudo.unaryExpr([](double v) {
      return std::min(1.0 - kPseudoClamp, std::max(kPseudoClamp, v));
    });
    FittedGlm fit = fit_logistic(X, y, w);
    return predict(fit, X_at);
  }
  FittedGlm fit = fit_ols(X, pseudo, w);
  return predict(fit, X_at);
}

std::vector<Eigen::VectorXd> sequential_Q(const FittedNuisanceSet& set) {
  const std::size_t T = set.horizon();
  std::vector<Eigen::VectorXd> q(T + 2);
  q[T + 1] = compute_terminal_pseudo(set);
  for (std::size_t t = T + 1; t-- > 0;)
    q[t] = sequential_fit_predict(set, set.spec().qm[t], q[t + 1], t,
                                  set.spec().sequential_logistic);
  return q;
}

SequentialR sequential_R(const FittedNuisanceSet& set) {
  const std::size_t T = set.horizon();
  if (T > 3) throw std::invalid_argument("sequential_R horizon cap (T <= 3) exceeded");
  const std::size_t n = set.data().n_rows();
  SequentialR out;
  out.kappa.resize(T + 1);
  out.r_a.resize(T + 1);

  // cur[h] = R_{A_{t+1}}(L0, h, M-bar_t), entering with t = T
  std::vector<Eigen::VectorXd> cur(std::size_t{1} << (T + 1));
  for (std::uint64_t h = 0; h < cur.size(); ++h) cur[h] = set.predict_qy(h);

  for (std::size_t t = T + 1; t-- > 0;) {
    const std::uint64_t n_hist = std::uint64_t{1} << (t + 1);
    out.kappa[t].resize(n_hist);
    for (std::uint64_t h = 0; h < n_hist; ++h)
      out.kappa[t][h] = sequential_fit_predict(set, set.spec().r[t], cur[h], t,
                                               set.spec().sequential_logistic);

    const std::uint64_t n_prev = std::uint64_t{1} << t;
    out.r_a[t].assign(n_prev, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
    for (std::uint64_t hp = 0; hp < n_prev; ++hp) {
      Eigen::VectorXd p = set.predict_pi(t, hp);
      const Eigen::VectorXd& k1 = out.kappa[t][hp | (std::uint64_t{1} << t)];
      const Eigen::VectorXd& k0 = out.kappa[t][hp];
      out.r_a[t][hp] = p.cwiseProduct(k1) +
                       ((1.0 - p.array()).matrix()).cwiseProduct(k0);
    }
    cur = out.r_a[t];
  }
  return out;
}

Eigen::VectorXd SequentialR::r_m_obs(const FittedNuisanceSet& set, std::size_t t) const {
  const std::size_t n = set.data().n_rows();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    out[static_cast<Eigen::Index>(i)] = kappa[t][set.observed_history(i, t)][static_cast<Eigen::Index>(i)];
  return out;
}

Eigen::VectorXd SequentialR::r_m_at(const FittedNuisanceSet& set, std::size_t t,
                                    int a_value) const {
  const std::size_t n = set.data().n_rows();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t prev = t ? set.observed_history(i, t - 1) : 0;
    std::uint64_t h = prev | (static_cast<std::uint64_t>(a_value) << t);
    out[static_cast<Eigen::Index>(i)] = kappa[t][h][static_cast<Eigen::Index>(i)];
  }
  return out;
}

Eigen::VectorXd SequentialR::r_a_obs(const FittedNuisanceSet& set, std::size_t t) const {
  const std::size_t n = set.data().n_rows();
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t prev = t ? set.observed_history(i, t - 1) : 0;
    out[static_cast<Eigen::Index>(i)] = r_a[t][prev][static_cast<Eigen::Index>(i)];
  }
  return out;
}

}  // namespace frontdoor
