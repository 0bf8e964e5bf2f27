#include "frontdoor/oracle.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace frontdoor {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

ExactJoint::ExactJoint(const DiscreteDgp& dgp, std::size_t config_cap) : dgp_(dgp) {
  dgp_.validate();
  if (!dgp_.all_binary())
    throw std::invalid_argument("enumeration requires an all-binary DGP");
  const std::size_t k = dgp_.variables.size();
  if (k >= 63 || (std::uint64_t{1} << k) > config_cap)
    throw std::invalid_argument("state space exceeds configuration cap");

  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < k; ++i) idx[dgp_.variables[i].name] = i;

  const std::uint64_t n_config = std::uint64_t{1} << k;
  probs_.assign(n_config, 0.0);
  for (std::uint64_t c = 0; c < n_config; ++c) {
    double p = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& v = dgp_.variables[i];
      double lin = v.intercept;
      for (const auto& [prod, coef] : v.coefficients) {
        double x = coef;
        for (const auto& par : prod) x *= static_cast<double>((c >> idx.at(par)) & 1);
        lin += x;
      }
      double p1 = expit(lin);
      p *= ((c >> i) & 1) ? p1 : 1.0 - p1;
    }
    probs_[c] = p;
  }

  std::vector<std::size_t> observed_src;
  for (std::size_t i = 0; i < k; ++i) {
    if (!dgp_.variables[i].latent) {
      observed_src.push_back(i);
      observed_names_.push_back(dgp_.variables[i].name);
    }
  }
  observed_probs_.assign(std::uint64_t{1} << observed_src.size(), 0.0);
  for (std::uint64_t c = 0; c < n_config; ++c) {
    std::uint64_t oc = 0;
    for (std::size_t j = 0; j < observed_src.size(); ++j)
      oc |= ((c >> observed_src[j]) & 1) << j;
    observed_probs_[oc] += probs_[c];
  }
}

std::size_t ExactJoint::observed_index(const std::string& name) const {
  for (std::size_t i = 0; i < observed_names_.size(); ++i)
    if (observed_names_[i] == name) return i;
  throw std::out_of_range("not an observed variable: " + name);
}

double ExactJoint::conditional(const std::vector<std::pair<std::size_t, int>>& targets,
                               const std::vector<std::pair<std::size_t, int>>& conditions) const {
  double num = 0.0, den = 0.0;
  for (std::uint64_t oc = 0; oc < observed_probs_.size(); ++oc) {
    bool cond_ok = true;
    for (const auto& [i, v] : conditions)
      if (static_cast<int>((oc >> i) & 1) != v) { cond_ok = false; break; }
    if (!cond_ok) continue;
    den += observed_probs_[oc];
    bool tgt_ok = true;
    for (const auto& [i, v] : targets)
      if (static_cast<int>((oc >> i) & 1) != v) { tgt_ok = false; break; }
    if (tgt_ok) num += observed_probs_[oc];
  }
  if (den <= 0.0) return 0.0;  // zero-mass conditioning event
  return num / den;
}

double ExactJoint::outcome_mean(const std::vector<std::pair<std::size_t, int>>& conditions) const {
  return conditional({{observed_index("Y"), 1}}, conditions);
}

LongitudinalDataset ExactJoint::population_dataset() const {
  const std::size_t m = observed_names_.size();
  std::vector<std::vector<double>> cols(m);
  std::vector<double> weights;
  for (std::uint64_t oc = 0; oc < observed_probs_.size(); ++oc) {
    for (std::size_t i = 0; i < m; ++i)
      cols[i].push_back(static_cast<double>((oc >> i) & 1));
    weights.push_back(observed_probs_[oc]);
  }
  return LongitudinalDataset(observed_names_, std::move(cols), dgp_.horizon(),
                             std::move(weights));
}

ExactJoint enumerate_joint(const DiscreteDgp& dgp, std::size_t config_cap) {
  return ExactJoint(dgp, config_cap);
}

double exact_f_functional(const ExactJoint& joint, const RegimeSpec& regime) {
  const DiscreteDgp& dgp = joint.dgp();
  const std::size_t T = dgp.horizon();
  if (regime.values.size() != T + 1)
    throw std::invalid_argument("regime length does not match DGP horizon");

  std::vector<std::size_t> base_idx, a_idx(T + 1), m_idx(T + 1);
  for (const auto& v : dgp.variables) {
    switch (v.role()) {
      case VarRole::Baseline: base_idx.push_back(joint.observed_index(v.name)); break;
      case VarRole::Treatment: a_idx[v.time_index()] = joint.observed_index(v.name); break;
      case VarRole::Mediator: m_idx[v.time_index()] = joint.observed_index(v.name); break;
      default: break;
    }
  }

  auto assign = [](const std::vector<std::size_t>& idx, std::uint64_t bits,
                   std::vector<std::pair<std::size_t, int>>& out) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      out.emplace_back(idx[i], static_cast<int>((bits >> i) & 1));
  };

  double total = 0.0;
  const std::uint64_t n_base = std::uint64_t{1} << base_idx.size();
  const std::uint64_t n_hist = std::uint64_t{1} << (T + 1);
  for (std::uint64_t lb = 0; lb < n_base; ++lb) {
    std::vector<std::pair<std::size_t, int>> l0;
    assign(base_idx, lb, l0);
    double p_l0 = joint.conditional(l0, {});
    if (p_l0 <= 0.0) continue;
    for (std::uint64_t mb = 0; mb < n_hist; ++mb) {
      // product of mediator densities at the regime treatments
      double g_prod = 1.0;
      for (std::size_t t = 0; t <= T; ++t) {
        std::vector<std::pair<std::size_t, int>> cond = l0;
        for (std::size_t k = 0; k <= t; ++k)
          cond.emplace_back(a_idx[k], regime.values[k]);
        for (std::size_t k = 0; k < t; ++k)
          cond.emplace_back(m_idx[k], static_cast<int>((mb >> k) & 1));
        g_prod *= joint.conditional({{m_idx[t], static_cast<int>((mb >> t) & 1)}}, cond);
      }
      if (g_prod <= 0.0) continue;
      // inner sum over treatment histories
      double inner = 0.0;
      for (std::uint64_t ab = 0; ab < n_hist; ++ab) {
        double pi_prod = 1.0;
        for (std::size_t t = 0; t <= T; ++t) {
          std::vector<std::pair<std::size_t, int>> cond = l0;
          for (std::size_t k = 0; k < t; ++k) {
            cond.emplace_back(a_idx[k], static_cast<int>((ab >> k) & 1));
            cond.emplace_back(m_idx[k], static_cast<int>((mb >> k) & 1));
          }
          pi_prod *= joint.conditional({{a_idx[t], static_cast<int>((ab >> t) & 1)}}, cond);
        }
        if (pi_prod <= 0.0) continue;
        std::vector<std::pair<std::size_t, int>> cond = l0;
        assign(a_idx, ab, cond);
        assign(m_idx, mb, cond);
        inner += joint.outcome_mean(cond) * pi_prod;
      }
      total += p_l0 * g_prod * inner;
    }
  }
  return total;
}

double exact_counterfactual_mean(const DiscreteDgp& dgp, const RegimeSpec& regime) {
  DiscreteDgp d = dgp;
  d.validate();
  if (!d.all_binary()) throw std::invalid_argument("oracle requires an all-binary DGP");
  const std::size_t T = d.horizon();
  if (regime.values.size() != T + 1)
    throw std::invalid_argument("regime length does not match DGP horizon");
  const std::size_t k = d.variables.size();
  if (k >= 63) throw std::invalid_argument("too many variables");

  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < k; ++i) idx[d.variables[i].name] = i;

  double mean = 0.0;
  const std::uint64_t n_config = std::uint64_t{1} << k;
  for (std::uint64_t c = 0; c < n_config; ++c) {
    // clamp treatments to the regime; skip configurations that disagree
    bool agrees = true;
    for (std::size_t i = 0; i < k && agrees; ++i) {
      const auto& v = d.variables[i];
      if (v.role() == VarRole::Treatment &&
          static_cast<int>((c >> i) & 1) != regime.values[v.time_index()])
        agrees = false;
    }
    if (!agrees) continue;
    double p = 1.0;
    double y = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& v = d.variables[i];
      int val = static_cast<int>((c >> i) & 1);
      if (v.role() == VarRole::Outcome) y = val;
      if (v.role() == VarRole::Treatment) continue;  // intervened, no factor
      double lin = v.intercept;
      for (const auto& [prod, coef] : v.coefficients) {
        double x = coef;
        for (const auto& par : prod) x *= static_cast<double>((c >> idx.at(par)) & 1);
        lin += x;
      }
      double p1 = expit(lin);
      p *= val ? p1 : 1.0 - p1;
    }
    mean += p * y;
  }
  return mean;
}

}  // namespace frontdoor
