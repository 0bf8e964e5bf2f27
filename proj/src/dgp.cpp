#include "frontdoor/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "frontdoor/rng.hpp"

namespace frontdoor {

namespace {

constexpr double kProbFloor = 1e-12;

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamp_prob(double p) {
  return std::min(1.0 - kProbFloor, std::max(kProbFloor, p));
}

}  // namespace

VarRole DgpVariable::role() const {
  if (latent) return VarRole::Latent;
  if (name == "Y") return VarRole::Outcome;
  if (name == "L0" || name.rfind("L0_", 0) == 0) return VarRole::Baseline;
  auto is_indexed = [&](char c) {
    return name.size() > 1 && name[0] == c &&
           name.find_first_not_of("0123456789", 1) == std::string::npos;
  };
  if (is_indexed('A')) return VarRole::Treatment;
  if (is_indexed('M')) return VarRole::Mediator;
  throw std::invalid_argument("cannot infer role of variable '" + name + "'");
}

int DgpVariable::time_index() const {
  return std::stoi(name.substr(1));
}

std::size_t DiscreteDgp::horizon() const {
  int t = -1;
  for (const auto& v : variables)
    if (v.role() == VarRole::Treatment) t = std::max(t, v.time_index());
  if (t < 0) throw std::invalid_argument("DGP has no treatment variables");
  return static_cast<std::size_t>(t);
}

bool DiscreteDgp::all_binary() const {
  return std::none_of(variables.begin(), variables.end(),
                      [](const DgpVariable& v) { return v.standard_normal; });
}

void DiscreteDgp::validate() const {
  std::set<std::string> seen;
  std::set<std::string> latent_names;
  for (const auto& v : variables) {
    for (const auto& [prod, coef] : v.coefficients) {
      (void)coef;
      for (const auto& p : prod) {
        if (!seen.count(p))
          throw std::invalid_argument("variable '" + v.name + "' references '" + p +
                                      "' before it is defined");
        if (latent_names.count(p)) {
          auto r = v.role();
          if (r != VarRole::Treatment && r != VarRole::Outcome)
            throw std::invalid_argument("latent variable '" + p +
                                        "' may only parent treatments and the outcome");
        }
      }
    }
    if (!seen.insert(v.name).second)
      throw std::invalid_argument("duplicate variable '" + v.name + "'");
    if (v.latent) latent_names.insert(v.name);
    if (v.standard_normal && v.role() != VarRole::Baseline)
      throw std::invalid_argument("only baseline variables may be standard normal");
  }
  (void)horizon();
}

std::string DiscreteDgp::to_json() const {
  nlohmann::json j;
  j["variables"] = nlohmann::json::array();
  for (const auto& v : variables) {
    nlohmann::json jv;
    jv["name"] = v.name;
    if (v.standard_normal) jv["kind"] = "normal";
    jv["latent"] = v.latent;
    jv["intercept"] = v.intercept;
    std::set<std::string> parents;
    nlohmann::json coefs = nlohmann::json::object();
    for (const auto& [prod, c] : v.coefficients) {
      std::string key;
      for (std::size_t i = 0; i < prod.size(); ++i) {
        if (i) key += '*';
        key += prod[i];
        parents.insert(prod[i]);
      }
      coefs[key] = c;
    }
    jv["parents"] = parents;
    jv["coefficients"] = coefs;
    j["variables"].push_back(jv);
  }
  return j.dump(2);
}

DiscreteDgp DiscreteDgp::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DiscreteDgp dgp;
  for (const auto& jv : j.at("variables")) {
    DgpVariable v;
    v.name = jv.at("name").get<std::string>();
    v.latent = jv.value("latent", false);
    v.standard_normal = jv.value("kind", std::string("bernoulli")) == "normal";
    v.intercept = jv.value("intercept", 0.0);
    if (jv.contains("coefficients")) {
      for (auto it = jv["coefficients"].begin(); it != jv["coefficients"].end(); ++it) {
        std::vector<std::string> prod;
        std::stringstream ss(it.key());
        std::string tok;
        while (std::getline(ss, tok, '*')) prod.push_back(tok);
        v.coefficients.emplace_back(std::move(prod), it.value().get<double>());
      }
    }
    dgp.variables.push_back(std::move(v));
  }
  dgp.validate();
  return dgp;
}

DiscreteDgp DiscreteDgp::paper(std::size_t horizon) {
  DiscreteDgp d;
  auto add = [&](std::string name, bool normal, bool latent, double intercept,
                 std::vector<std::pair<std::vector<std::string>, double>> coefs) {
    d.variables.push_back({std::move(name), normal, latent, intercept, std::move(coefs)});
  };
  add("U", false, true, 0.0, {});
  add("L0_1", true, false, 0.0, {});
  add("L0_2", false, false, 1.0, {{{"L0_1"}, 2.0}});
  for (std::size_t t = 0; t <= horizon; ++t) {
    std::string At = "A" + std::to_string(t);
    std::string Mt = "M" + std::to_string(t);
    std::vector<std::pair<std::vector<std::string>, double>> ac = {
        {{"L0_1"}, -2.0}, {{"L0_2"}, 1.0}, {{"L0_1", "L0_2"}, 4.0}, {{"U"}, 2.0}};
    std::vector<std::pair<std::vector<std::string>, double>> mc = {
        {{At}, -1.0}, {{"L0_1"}, -2.0}, {{"L0_2"}, 2.0}, {{"L0_1", "L0_2"}, 3.0}};
    if (t >= 1) {
      std::string Ap = "A" + std::to_string(t - 1);
      std::string Mp = "M" + std::to_string(t - 1);
      ac.push_back({{Ap}, 2.0});
      ac.push_back({{Mp}, -1.0});
      ac.push_back({{Ap, Mp}, -1.0});
      mc.push_back({{Mp}, 1.0});
      mc.push_back({{Ap}, -0.5});
    }
    add(At, false, false, -2.0, std::move(ac));
    add(Mt, false, false, -1.0, std::move(mc));
  }
  std::vector<std::pair<std::vector<std::string>, double>> yc = {
      {{"M" + std::to_string(horizon)}, 2.0},
      {{"L0_1"}, 2.0},
      {{"L0_2"}, -2.0},
      {{"L0_1", "L0_2"}, -4.0},
      {{"U"}, -1.0}};
  if (horizon >= 1) yc.push_back({{"M" + std::to_string(horizon - 1)}, 1.0});
  add("Y", false, false, 1.0, std::move(yc));
  d.validate();
  return d;
}

DiscreteDgp DiscreteDgp::toy_v1() {
  DiscreteDgp d;
  auto add = [&](std::string name, bool latent, double intercept,
                 std::vector<std::pair<std::vector<std::string>, double>> coefs) {
    d.variables.push_back({std::move(name), false, latent, intercept, std::move(coefs)});
  };
  add("U", true, 0.0, {});
  add("L0_1", false, 0.3, {});
  add("A0", false, -0.3, {{{"L0_1"}, 0.8}, {{"U"}, 1.0}});
  add("M0", false, -0.2, {{{"A0"}, 1.0}, {{"L0_1"}, 0.6}});
  add("A1", false, 0.2,
      {{{"L0_1"}, 0.5}, {{"A0"}, 0.7}, {{"M0"}, -0.4}, {{"U"}, 1.0}});
  add("M1", false, -0.4,
      {{{"A1"}, 0.9}, {{"M0"}, 0.5}, {{"L0_1"}, 0.4}, {{"A0"}, -0.3}});
  add("Y", false, 0.2,
      {{{"M1"}, 1.2}, {{"M0"}, 0.6}, {{"L0_1"}, -0.5}, {{"U"}, -1.0}});
  d.validate();
  return d;
}

DiscreteDgp DiscreteDgp::resolve(const std::string& ref) {
  if (ref == "builtin:paper") return paper();
  if (ref == "builtin:toy-v1") return toy_v1();
  std::ifstream in(ref);
  if (!in) throw std::runtime_error("cannot open DGP file: " + ref);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

namespace {

// Shared draw loop; regime (when present) clamps treatments instead of
// drawing them, consuming no randomness for the clamped variables.
struct SimResult {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<double> y;  // convenience copy
};

SimResult run_simulation(const DiscreteDgp& dgp, std::size_t n, std::uint64_t seed,
                         const RegimeSpec* regime) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (regime && regime->values.size() != dgp.horizon() + 1)
    throw std::invalid_argument("regime length does not match DGP horizon");
  SimResult out;
  std::map<std::string, std::size_t> idx;
  for (const auto& v : dgp.variables) {
    idx[v.name] = out.names.size();
    out.names.push_back(v.name);
  }
  out.columns.assign(out.names.size(), std::vector<double>(n));
  Rng rng(seed);
  std::vector<double> row(out.names.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t vi = 0; vi < dgp.variables.size(); ++vi) {
      const auto& v = dgp.variables[vi];
      double value;
      if (regime && v.role() == VarRole::Treatment) {
        value = regime->values[static_cast<std::size_t>(v.time_index())];
      } else if (v.standard_normal) {
        value = rng.normal();
      } else {
        double lin = v.intercept;
        for (const auto& [prod, c] : v.coefficients) {
          double x = c;
          for (const auto& p : prod) x *= row[idx.at(p)];
          lin += x;
        }
        value = rng.bernoulli(clamp_prob(expit(lin))) ? 1.0 : 0.0;
      }
      row[vi] = value;
      out.columns[vi][r] = value;
    }
  }
  out.y = out.columns[idx.at("Y")];
  return out;
}

}  // namespace

LongitudinalDataset simulate_dgp(const DiscreteDgp& dgp, std::size_t n, std::uint64_t seed) {
  SimResult sim = run_simulation(dgp, n, seed, nullptr);
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  for (std::size_t i = 0; i < sim.names.size(); ++i) {
    if (dgp.variables[i].latent) continue;
    names.push_back(sim.names[i]);
    cols.push_back(std::move(sim.columns[i]));
  }
  return LongitudinalDataset(std::move(names), std::move(cols), dgp.horizon());
}

LongitudinalDataset simulate_paper_dgp(std::size_t n, std::uint64_t seed,
                                       const std::optional<DiscreteDgp>& override_dgp) {
  return simulate_dgp(override_dgp ? *override_dgp : DiscreteDgp::paper(), n, seed);
}

double simulate_ground_truth(std::size_t n, std::uint64_t seed,
                             const RegimeSpec& regime, const DiscreteDgp& dgp) {
  SimResult sim = run_simulation(dgp, n, seed, &regime);
  double s = 0.0;
  for (double v : sim.y) s += v;
  return s / static_cast<double>(n);
}

}  // namespace frontdoor
