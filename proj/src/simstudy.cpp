#include "frontdoor/simstudy.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "frontdoor/estimators.hpp"
#include "frontdoor/rng.hpp"

namespace frontdoor {

namespace {

// ---- built-in scenarios (two periods, single binary mediator) ----

struct PiShape {
  std::vector<std::vector<std::string>> base;  // base[j]: covariates of A_j
  bool squared;
};

std::string join_formula(const std::vector<std::string>& tokens, bool squared) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += " + ";
    s += tokens[i];
  }
  return squared ? "(" + s + ")^2" : s;
}

// A_j regressed on its scenario covariates plus the mediators through m_max
// that are not already present
Formula gamma_formula(const PiShape& shape, std::size_t j, int m_max) {
  std::vector<std::string> tokens = shape.base[j];
  for (int k = 0; k <= m_max; ++k) {
    std::string m = "M" + std::to_string(k);
    if (std::find(tokens.begin(), tokens.end(), m) == tokens.end()) tokens.push_back(m);
  }
  return Formula::parse(join_formula(tokens, shape.squared));
}

NuisanceSpec scenario_spec(const std::vector<std::string>& pi,
                           const std::vector<std::string>& g,
                           const std::vector<std::string>& qm,
                           const std::vector<std::string>& r, const std::string& qy,
                           const PiShape& shape) {
  NuisanceSpec s;
  for (const auto& f : pi) s.pi.push_back(Formula::parse(f));
  for (const auto& f : g) s.g.push_back(Formula::parse(f));
  for (const auto& f : qm) s.qm.push_back(Formula::parse(f));
  for (const auto& f : r) s.r.push_back(Formula::parse(f));
  s.qy = Formula::parse(qy);
  const std::size_t T = pi.size() - 1;
  s.gamma1.resize(T + 1);
  s.gamma2.resize(T + 1);
  for (std::size_t t = 0; t <= T; ++t)
    for (std::size_t j = 0; j <= t; ++j) {
      s.gamma1[t].push_back(gamma_formula(shape, j, static_cast<int>(t)));
      s.gamma2[t].push_back(gamma_formula(shape, j, static_cast<int>(t) - 1));
    }
  return s;
}

const PiShape kPiCorrect{{{"L1", "L2"}, {"L1", "L2", "A0", "M0"}}, true};
const PiShape kPiWrong{{{"L2"}, {"L2", "A0", "M0"}}, false};

const std::vector<std::string> kPiA{"(L1 + L2)^2", "(L1 + L2 + A0 + M0)^2"};
const std::vector<std::string> kPiD{"L2", "L2 + A0 + M0"};
const std::vector<std::string> kGCorrect{"L1 + L2 + L1*L2 + A0",
                                         "L1 + L2 + L1*L2 + A0 + A1 + M0"};
const std::vector<std::string> kGWrong{"L1 + L2 + A0", "L1 + L2 + A0 + A1 + M0"};
const std::vector<std::string> kSeqCorrect{"(L1 + L2)^2", "(L1 + L2 + M0)^2"};
const std::vector<std::string> kSeqWrong{"L2", "L2 + M0"};
const std::string kQyCorrect = "(L1 + L2 + M0 + M1)^2";
const std::string kQyWrong = "L1 + M0 + M1";

}  // namespace

ScenarioSpec ScenarioSpec::builtin(char id) {
  ScenarioSpec out;
  out.id = std::string(1, id);
  switch (id) {
    case 'a':
      out.description = "all nuisance models approximately correct";
      out.spec = scenario_spec(kPiA, kGCorrect, kSeqCorrect, kSeqCorrect, kQyCorrect,
                               kPiCorrect);
      break;
    case 'b':
      out.description = "outcome and sequential regressions misspecified";
      out.spec =
          scenario_spec(kPiA, kGCorrect, kSeqWrong, kSeqWrong, kQyWrong, kPiCorrect);
      break;
    case 'c':
      out.description = "mediator densities and sequential regressions misspecified";
      out.spec =
          scenario_spec(kPiA, kGWrong, kSeqWrong, kSeqWrong, kQyCorrect, kPiCorrect);
      break;
    case 'd':
      out.description = "treatment propensities and outcome regression misspecified";
      out.spec =
          scenario_spec(kPiD, kGCorrect, kSeqCorrect, kSeqCorrect, kQyWrong, kPiWrong);
      break;
    case 'e':
      out.description = "all nuisance models misspecified";
      out.spec = scenario_spec(kPiD, kGWrong, kSeqWrong, kSeqWrong, kQyWrong, kPiWrong);
      break;
    default:
      throw std::invalid_argument("unknown scenario id: " + std::string(1, id));
  }
  return out;
}

void MonteCarloConfig::validate() const {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  for (std::size_t v : n)
    if (v < 50) throw std::invalid_argument("sample sizes must be >= 50");
  if (n.empty()) throw std::invalid_argument("at least one sample size required");
  if (estimators.empty()) throw std::invalid_argument("at least one estimator required");
  if (regimes.empty()) throw std::invalid_argument("at least one regime required");
  for (const auto& r : regimes)
    if (r.values.size() != regimes.front().values.size())
      throw std::invalid_argument("regimes must share one horizon");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha outside (0,1)");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

namespace {

std::string regime_digits(const RegimeSpec& r) {
  std::string s;
  for (int v : r.values) s += static_cast<char>('0' + v);
  return s;
}

bool has_ci(const std::string& estimator) {
  return estimator == "onestep" || estimator == "tmle" || estimator == "tmle_med";
}

double pairwise_sum(const double* v, std::size_t len) {
  if (len == 0) return 0.0;
  if (len <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += v[i];
    return s;
  }
  std::size_t half = len / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, len - half);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

struct Cell {
  std::vector<double> psi, se;
  std::vector<char> ok, covered;
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("metrics.csv line " + std::to_string(line) +
                             ": bad number '" + s + "'");
  return v;
}

}  // namespace

StudyReport run_study(const MonteCarloConfig& config, const std::vector<ScenarioSpec>& scenarios,
                      const DiscreteDgp& dgp) {
  config.validate();
  dgp.validate();
  if (scenarios.empty()) throw std::invalid_argument("at least one scenario required");
  const std::size_t T = dgp.horizon();
  for (const auto& r : config.regimes)
    if (r.horizon() != T) throw std::invalid_argument("regime horizon does not match the model");
  for (const auto& s : scenarios) s.spec.validate(T);

  StudyReport report;
  report.truth_supplied = !config.truth.empty();
  for (std::size_t ri = 0; ri < config.regimes.size(); ++ri) {
    std::string key = regime_digits(config.regimes[ri]);
    auto it = config.truth.find(key);
    if (it != config.truth.end()) {
      report.truth[key] = it->second;
    } else {
      report.truth[key] = simulate_ground_truth(
          config.truth_draws, mix_seed(config.seed, 0x74727574 + ri), config.regimes[ri], dgp);
    }
  }

  const std::size_t S = scenarios.size(), E = config.estimators.size(),
                    R = config.regimes.size(), N = config.n.size();
  std::vector<Cell> cells(S * E * R * N);
  for (auto& c : cells) {
    c.psi.assign(config.reps, 0.0);
    c.se.assign(config.reps, 0.0);
    c.ok.assign(config.reps, 0);
    c.covered.assign(config.reps, 0);
  }
  auto cell_index = [&](std::size_t si, std::size_t ei, std::size_t ri, std::size_t ni) {
    return ((si * E + ei) * R + ri) * N + ni;
  };

  // one dataset per (n, rep), shared across scenarios/estimators/regimes;
  // seeds keyed by (n, rep) so execution order never matters
  auto run_one = [&](std::size_t ni, std::size_t rep) {
    std::uint64_t seed = mix_seed(mix_seed(config.seed, config.n[ni]), rep);
    LongitudinalDataset data = simulate_dgp(dgp, config.n[ni], seed);
    for (std::size_t si = 0; si < S; ++si)
      for (std::size_t ei = 0; ei < E; ++ei)
        for (std::size_t ri = 0; ri < R; ++ri) {
          Cell& c = cells[cell_index(si, ei, ri, ni)];
          try {
            EstimateResult res =
                run_estimator(config.estimators[ei], data, scenarios[si].spec,
                              config.regimes[ri], config.alpha);
            c.psi[rep] = res.psi_hat;
            c.ok[rep] = 1;
            if (res.ci) {
              double truth = report.truth[regime_digits(config.regimes[ri])];
              c.se[rep] = *res.se;
              c.covered[rep] = res.ci->first <= truth && truth <= res.ci->second;
            }
          } catch (const std::exception&) {
            // dropped for this estimator only, counted below
          }
        }
  };

  const std::size_t total = N * config.reps;
  if (config.jobs <= 1) {
    for (std::size_t u = 0; u < total; ++u) run_one(u / config.reps, u % config.reps);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        std::size_t u = next.fetch_add(1);
        if (u >= total) return;
        run_one(u / config.reps, u % config.reps);
      }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < config.jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t si = 0; si < S; ++si)
    for (std::size_t ei = 0; ei < E; ++ei)
      for (std::size_t ri = 0; ri < R; ++ri)
        for (std::size_t ni = 0; ni < N; ++ni) {
          const Cell& c = cells[cell_index(si, ei, ri, ni)];
          StudyRow row;
          row.scenario = scenarios[si].id;
          row.estimator = config.estimators[ei];
          row.regime = regime_digits(config.regimes[ri]);
          row.n = config.n[ni];
          std::vector<double> psi, se;
          double ncov = 0.0;
          for (std::size_t rep = 0; rep < config.reps; ++rep)
            if (c.ok[rep]) {
              psi.push_back(c.psi[rep]);
              se.push_back(c.se[rep]);
              ncov += c.covered[rep];
            }
          row.reps = psi.size();
          row.failures = config.reps - psi.size();
          if (!psi.empty()) {
            double mean = pairwise_sum(psi) / static_cast<double>(psi.size());
            row.mean_psi = mean;
            double truth = report.truth[row.regime];
            double rootn = std::sqrt(static_cast<double>(row.n));
            row.scaled_abs_bias = rootn * std::abs(mean - truth);
            if (psi.size() > 1) {
              std::vector<double> sq(psi.size());
              for (std::size_t i = 0; i < psi.size(); ++i)
                sq[i] = (psi[i] - mean) * (psi[i] - mean);
              row.scaled_sd = rootn * std::sqrt(pairwise_sum(sq) /
                                                static_cast<double>(psi.size() - 1));
            }
            if (has_ci(row.estimator)) {
              row.coverage = ncov / static_cast<double>(psi.size());
              row.mean_se = pairwise_sum(se) / static_cast<double>(se.size());
            }
          }
          report.rows.push_back(std::move(row));
        }
  return report;
}

void write_metrics_csv(const StudyReport& report, std::ostream& os) {
  os << "scenario,estimator,regime,n,reps,mean_psi,scaled_abs_bias,scaled_sd,coverage,"
        "mean_se,failures\n";
  for (const auto& r : report.rows) {
    os << r.scenario << ',' << r.estimator << ',' << r.regime << ',' << r.n << ','
       << r.reps << ',' << format_double(r.mean_psi) << ','
       << format_double(r.scaled_abs_bias) << ',' << format_double(r.scaled_sd) << ','
       << (r.coverage ? format_double(*r.coverage) : std::string()) << ','
       << (r.mean_se ? format_double(*r.mean_se) : std::string()) << ',' << r.failures
       << '\n';
  }
}

StudyReport parse_metrics_csv(std::istream& is) {
  StudyReport report;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("metrics.csv: empty file");
  if (line != "scenario,estimator,regime,n,reps,mean_psi,scaled_abs_bias,scaled_sd,"
              "coverage,mean_se,failures")
    throw std::runtime_error("metrics.csv line 1: unexpected header");
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    f.push_back(cur);
    if (f.size() != 11)
      throw std::runtime_error("metrics.csv line " + std::to_string(lineno) +
                               ": expected 11 fields, got " + std::to_string(f.size()));
    StudyRow r;
    r.scenario = f[0];
    r.estimator = f[1];
    r.regime = f[2];
    r.n = static_cast<std::size_t>(parse_double(f[3], lineno));
    r.reps = static_cast<std::size_t>(parse_double(f[4], lineno));
    r.mean_psi = parse_double(f[5], lineno);
    r.scaled_abs_bias = parse_double(f[6], lineno);
    r.scaled_sd = parse_double(f[7], lineno);
    if (!f[8].empty()) r.coverage = parse_double(f[8], lineno);
    if (!f[9].empty()) r.mean_se = parse_double(f[9], lineno);
    r.failures = static_cast<std::size_t>(parse_double(f[10], lineno));
    report.rows.push_back(std::move(r));
  }
  return report;
}

namespace {

const char* series_color(const std::string& estimator) {
  if (estimator == "ipw1") return "#1b9e77";
  if (estimator == "ipw2a") return "#d95f02";
  if (estimator == "ipw2b") return "#7570b3";
  if (estimator == "sr1") return "#e7298a";
  if (estimator == "sr2") return "#66a61e";
  if (estimator == "onestep") return "#e6ab02";
  if (estimator == "tmle") return "#a6761d";
  if (estimator == "tmle_med") return "#666666";
  return "#000000";
}

std::string fixed2(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string render_metric_svg(const StudyReport& report, int metric) {
  const char* titles[] = {"Scaled absolute bias", "Scaled standard deviation",
                          "Coverage of the 95% interval"};
  if (metric < 0 || metric > 2) throw std::invalid_argument("metric index outside 0..2");

  // panels: scenario x regime in first-appearance order
  std::vector<std::pair<std::string, std::string>> panels;
  std::vector<std::string> estimators;
  std::set<std::size_t> n_set;
  auto value_of = [&](const StudyRow& r) -> std::optional<double> {
    if (metric == 0) return r.scaled_abs_bias;
    if (metric == 1) return r.scaled_sd;
    return r.coverage;
  };
  for (const auto& r : report.rows) {
    auto key = std::make_pair(r.scenario, r.regime);
    if (std::find(panels.begin(), panels.end(), key) == panels.end()) panels.push_back(key);
    if (std::find(estimators.begin(), estimators.end(), r.estimator) == estimators.end())
      estimators.push_back(r.estimator);
    n_set.insert(r.n);
  }
  std::vector<std::size_t> ns(n_set.begin(), n_set.end());
  double y_max = metric == 2 ? 1.0 : 1e-12;
  if (metric != 2)
    for (const auto& r : report.rows)
      if (auto v = value_of(r)) y_max = std::max(y_max, *v);

  const double pw = 260, ph = 200, ml = 48, mb = 36, mt = 28, mr = 12, legend_h = 26;
  const double W = panels.empty() ? 320 : static_cast<double>(panels.size()) * pw + 20;
  const double H = ph + legend_h + 20;
  double x_min = ns.empty() ? 0 : static_cast<double>(ns.front());
  double x_max = ns.empty() ? 1 : static_cast<double>(ns.back());
  if (x_max <= x_min) x_max = x_min + 1;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W
    << "\" height=\"" << H << "\">\n";
  s << "<text x=\"10\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">"
    << titles[metric] << "</text>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    double ox = 10 + static_cast<double>(p) * pw;
    double plot_x = ox + ml, plot_y = mt, plot_w = pw - ml - mr, plot_h = ph - mt - mb;
    auto sx = [&](double n) { return plot_x + (n - x_min) / (x_max - x_min) * plot_w; };
    auto sy = [&](double v) { return plot_y + (1.0 - v / y_max) * plot_h; };
    s << "<text x=\"" << fixed2(plot_x) << "\" y=\"" << fixed2(plot_y - 6)
      << "\" font-family=\"sans-serif\" font-size=\"11\">scenario " << panels[p].first
      << ", regime " << panels[p].second << "</text>\n";
    s << "<rect x=\"" << fixed2(plot_x) << "\" y=\"" << fixed2(plot_y) << "\" width=\""
      << fixed2(plot_w) << "\" height=\"" << fixed2(plot_h)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    // axis extremes
    s << "<text x=\"" << fixed2(plot_x - 4) << "\" y=\"" << fixed2(plot_y + plot_h + 4)
      << "\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"end\">0</text>\n";
    s << "<text x=\"" << fixed2(plot_x - 4) << "\" y=\"" << fixed2(plot_y + 4)
      << "\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"end\">"
      << fixed2(y_max) << "</text>\n";
    for (std::size_t nv : ns)
      s << "<text x=\"" << fixed2(sx(static_cast<double>(nv))) << "\" y=\""
        << fixed2(plot_y + plot_h + 14)
        << "\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\">" << nv
        << "</text>\n";
    for (const auto& est : estimators) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t nv : ns)
        for (const auto& r : report.rows)
          if (r.scenario == panels[p].first && r.regime == panels[p].second &&
              r.estimator == est && r.n == nv)
            if (auto v = value_of(r))
              pts.emplace_back(sx(static_cast<double>(nv)),
                               sy(std::min(*v, y_max)));
      if (pts.empty()) continue;
      s << "<polyline fill=\"none\" stroke=\"" << series_color(est)
        << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) s << ' ';
        s << fixed2(pts[i].first) << ',' << fixed2(pts[i].second);
      }
      s << "\"/>\n";
      for (const auto& pt : pts)
        s << "<circle cx=\"" << fixed2(pt.first) << "\" cy=\"" << fixed2(pt.second)
          << "\" r=\"2\" fill=\"" << series_color(est) << "\"/>\n";
    }
  }
  // legend
  double lx = 10;
  for (const auto& est : estimators) {
    s << "<rect x=\"" << fixed2(lx) << "\" y=\"" << fixed2(ph + 8)
      << "\" width=\"10\" height=\"10\" fill=\"" << series_color(est) << "\"/>\n";
    s << "<text x=\"" << fixed2(lx + 14) << "\" y=\"" << fixed2(ph + 17)
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << est << "</text>\n";
    lx += 14 + 8 + 7 * static_cast<double>(est.size());
  }
  s << "</svg>\n";
  return s.str();
}

void emit_report(const StudyReport& report, const std::string& out_dir, bool plots) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir + "/metrics.csv", std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + out_dir + "/metrics.csv");
    write_metrics_csv(report, os);
  }
  if (!report.truth.empty()) {
    nlohmann::json meta;
    meta["truth"] = report.truth;
    meta["truth_supplied"] = report.truth_supplied;
    std::ofstream os(out_dir + "/meta.json", std::ios::binary);
    os << meta.dump(2) << '\n';
  }
  if (plots) {
    const char* names[] = {"bias.svg", "sd.svg", "coverage.svg"};
    for (int m = 0; m < 3; ++m) {
      std::ofstream os(out_dir + "/" + names[m], std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + out_dir + "/" + names[m]);
      os << render_metric_svg(report, m);
    }
  }
}

StudyConfig parse_study_config(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  StudyConfig cfg;
  cfg.dgp = DiscreteDgp::resolve(j.value("dgp", std::string("builtin:paper")));
  if (!j.contains("scenarios")) throw std::runtime_error("study config: missing scenarios");
  for (const auto& sc : j.at("scenarios")) {
    if (sc.is_string()) {
      std::string id = sc.get<std::string>();
      if (id.size() != 1)
        throw std::runtime_error("study config: unknown scenario '" + id + "'");
      cfg.scenarios.push_back(ScenarioSpec::builtin(id[0]));
    } else {
      ScenarioSpec s;
      s.id = sc.at("id").get<std::string>();
      s.description = sc.value("description", std::string());
      s.spec = NuisanceSpec::from_json(sc.at("spec").dump());
      cfg.scenarios.push_back(std::move(s));
    }
  }
  if (j.contains("n")) cfg.mc.n = j.at("n").get<std::vector<std::size_t>>();
  cfg.mc.reps = j.value("reps", std::size_t{1000});
  if (j.contains("estimators"))
    cfg.mc.estimators = j.at("estimators").get<std::vector<std::string>>();
  else
    cfg.mc.estimators = {"ipw1", "ipw2a", "ipw2b", "sr1", "sr2", "onestep", "tmle"};
  if (j.contains("regimes")) {
    cfg.mc.regimes.clear();
    for (const auto& r : j.at("regimes"))
      cfg.mc.regimes.push_back(RegimeSpec{r.get<std::vector<int>>()});
  }
  cfg.mc.seed = j.value("seed", std::uint64_t{1});
  cfg.mc.alpha = j.value("alpha", 0.05);
  if (j.contains("truth") && !j.at("truth").is_string()) {
    for (auto it = j.at("truth").begin(); it != j.at("truth").end(); ++it)
      cfg.mc.truth[it.key()] = it.value().get<double>();
  }
  return cfg;
}

}  // namespace frontdoor
