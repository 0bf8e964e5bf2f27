#pragma once

#include <string>
#include <vector>

#include "frontdoor/nuisance.hpp"

namespace testutil {

// All products of nonempty subsets of vars, joined by " + ": the saturated
// linear predictor over binary covariates.
inline std::string saturated(const std::vector<std::string>& vars) {
  std::string s;
  for (std::size_t mask = 1; mask < (std::size_t{1} << vars.size()); ++mask) {
    std::string term;
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (mask & (std::size_t{1} << i)) {
        if (!term.empty()) term += "*";
        term += vars[i];
      }
    if (!s.empty()) s += " + ";
    s += term;
  }
  return s;
}

// Saturated nuisance models for a two-period model with a single binary
// baseline covariate L1: every conditional is fitted exactly on a
// population-weighted dataset.
inline frontdoor::NuisanceSpec toy_saturated_spec() {
  using frontdoor::Formula;
  frontdoor::NuisanceSpec s;
  s.pi = {Formula::parse(saturated({"L1"})), Formula::parse(saturated({"L1", "A0", "M0"}))};
  s.g = {Formula::parse(saturated({"L1", "A0"})),
         Formula::parse(saturated({"L1", "A0", "M0", "A1"}))};
  s.qy = Formula::parse(saturated({"L1", "A0", "M0", "A1", "M1"}));
  s.qm = {Formula::parse(saturated({"L1"})), Formula::parse(saturated({"L1", "M0"}))};
  s.r = s.qm;
  s.gamma1 = {{Formula::parse(saturated({"L1", "M0"}))},
              {Formula::parse(saturated({"L1", "M0", "M1"})),
               Formula::parse(saturated({"L1", "A0", "M0", "M1"}))}};
  s.gamma2 = {{Formula::parse(saturated({"L1"}))},
              {Formula::parse(saturated({"L1", "M0"})),
               Formula::parse(saturated({"L1", "A0", "M0"}))}};
  return s;
}

}  // namespace testutil
