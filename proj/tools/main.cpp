#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "frontdoor/dgp.hpp"
#include "frontdoor/estimators.hpp"
#include "frontdoor/oracle.hpp"
#include "frontdoor/simstudy.hpp"

namespace {

using namespace frontdoor;

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// "-" writes to stdout
void emit(const std::string& out, const std::string& content) {
  if (out == "-") {
    std::cout << content;
    return;
  }
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + out);
  os << content;
}

int run(int argc, char** argv) {
  CLI::App app{"Longitudinal front-door estimation toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw a dataset from a generative model");
  std::string sim_dgp = "builtin:paper", sim_out = "-";
  std::size_t sim_n = 1000;
  std::uint64_t sim_seed = 1;
  sim->add_option("--dgp", sim_dgp, "builtin:paper, builtin:toy-v1, or a JSON file");
  sim->add_option("--n", sim_n, "number of rows")->required();
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out", sim_out, "output CSV path, or - for stdout");

  // estimate
  auto* est = app.add_subcommand("estimate", "Run one estimator on a dataset");
  std::string est_data, est_spec, est_id, est_regime, est_out = "-";
  double est_alpha = 0.05;
  est->add_option("--data", est_data, "dataset CSV")->required();
  est->add_option("--spec", est_spec, "nuisance model JSON")->required();
  est->add_option("--estimator", est_id,
                  "ipw1|ipw2a|ipw2b|sr1|sr2|onestep|tmle|tmle_med")
      ->required();
  est->add_option("--regime", est_regime, "treatment regime, e.g. 1,1")->required();
  est->add_option("--alpha", est_alpha, "two-sided interval level");
  est->add_option("--out", est_out, "result JSON path, or - for stdout");

  // study
  auto* study = app.add_subcommand("study", "Run a Monte Carlo study");
  std::string study_config, study_out;
  int study_jobs = 1;
  bool study_no_plots = false;
  study->add_option("--config", study_config, "study JSON config")->required();
  study->add_option("--out", study_out, "output directory")->required();
  study->add_option("--jobs", study_jobs, "parallel workers");
  study->add_flag("--no-plots", study_no_plots, "skip SVG charts");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Evaluate the identifying functional");
  std::string or_dgp, or_regime, or_mode = "exact";
  std::size_t or_n = 1000000;
  std::uint64_t or_seed = 7;
  oracle->add_option("--dgp", or_dgp, "generative model reference")->required();
  oracle->add_option("--regime", or_regime, "treatment regime, e.g. 1,1")->required();
  oracle->add_option("--mode", or_mode, "exact|mc")->check(CLI::IsMember({"exact", "mc"}));
  oracle->add_option("--n", or_n, "Monte Carlo draws (mc mode)");
  oracle->add_option("--seed", or_seed, "RNG seed (mc mode)");

  // plot
  auto* plot = app.add_subcommand("plot", "Regenerate SVG charts from metrics.csv");
  std::string plot_in, plot_out;
  plot->add_option("--in", plot_in, "metrics.csv path")->required();
  plot->add_option("--out", plot_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      DiscreteDgp dgp = DiscreteDgp::resolve(sim_dgp);
      LongitudinalDataset data = simulate_dgp(dgp, sim_n, sim_seed);
      std::ostringstream ss;
      data.write_csv(ss);
      emit(sim_out, ss.str());
    } else if (*est) {
      RegimeSpec regime = RegimeSpec::parse(est_regime);
      std::ifstream is(est_data, std::ios::binary);
      if (!is) throw std::runtime_error("cannot open " + est_data);
      LongitudinalDataset data = LongitudinalDataset::read_csv(is);
      if (regime.values.size() != data.horizon() + 1) {
        std::cerr << "regime has " << regime.values.size() << " periods but the data has "
                  << data.horizon() + 1 << "\n";
        return 1;
      }
      NuisanceSpec spec = NuisanceSpec::from_json(slurp(est_spec));
      EstimateResult res = run_estimator(est_id, data, spec, regime, est_alpha);
      emit(est_out, res.to_json() + "\n");
      std::ostringstream line;
      line.precision(6);
      line << "psi=" << res.psi_hat;
      if (res.se) line << " se=" << *res.se;
      if (res.ci) line << " ci=[" << res.ci->first << "," << res.ci->second << "]";
      std::cout << line.str() << "\n";
    } else if (*study) {
      StudyConfig cfg = parse_study_config(slurp(study_config));
      cfg.mc.jobs = study_jobs;
      StudyReport report = run_study(cfg.mc, cfg.scenarios, cfg.dgp);
      emit_report(report, study_out, !study_no_plots);
    } else if (*oracle) {
      DiscreteDgp dgp = DiscreteDgp::resolve(or_dgp);
      RegimeSpec regime = RegimeSpec::parse(or_regime);
      if (regime.values.size() != dgp.horizon() + 1) {
        std::cerr << "regime has " << regime.values.size() << " periods but the model has "
                  << dgp.horizon() + 1 << "\n";
        return 1;
      }
      std::cout.precision(12);
      if (or_mode == "exact") {
        ExactJoint joint(dgp);
        double f = exact_f_functional(joint, regime);
        double cf = exact_counterfactual_mean(dgp, regime);
        std::cout << "functional=" << f << "\n"
                  << "counterfactual_mean=" << cf << "\n"
                  << "difference=" << f - cf << "\n";
      } else {
        double mc = simulate_ground_truth(or_n, or_seed, regime, dgp);
        std::cout << "mc_counterfactual_mean=" << mc << "\n";
      }
    } else if (*plot) {
      std::ifstream is(plot_in, std::ios::binary);
      if (!is) throw std::runtime_error("cannot open " + plot_in);
      StudyReport report = parse_metrics_csv(is);
      std::filesystem::create_directories(plot_out);
      const char* names[] = {"bias.svg", "sd.svg", "coverage.svg"};
      for (int m = 0; m < 3; ++m) {
        std::ofstream os(plot_out + "/" + names[m], std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + plot_out);
        os << render_metric_svg(report, m);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
