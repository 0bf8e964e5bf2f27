#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "frontdoor/dataset.hpp"

namespace frontdoor {

// A model term: the product of the named columns (empty product = intercept).
struct Term {
  std::vector<std::string> columns;

  bool is_intercept() const { return columns.empty(); }
  std::string label() const;
  bool operator==(const Term& other) const { return columns == other.columns; }
};

// Parsed model specification, e.g. "(L1 + L2 + M0)^2" or "L1 + L2 + L1*L2 + A0".
// Always contains the intercept as its first term.
class Formula {
 public:
  static Formula parse(const std::string& text);

  const std::vector<Term>& terms() const { return terms_; }
  std::size_t n_terms() const { return terms_.size(); }
  std::string print() const;  // canonical "+"/"*" form, reparses to an equal Formula
  // verbatim text this formula was parsed from (empty when built by hand);
  // used so serialized model lists keep their "(...)^2" shorthand
  const std::string& source() const { return source_; }

  bool operator==(const Formula& other) const { return terms_ == other.terms_; }

 private:
  std::vector<Term> terms_;
  std::string source_;
};

struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> labels;
};

using ColumnBindings = std::map<std::string, std::string>;

// Dataset columns under their own names plus Lk -> L0_k aliases.
ColumnBindings default_bindings(const LongitudinalDataset& data);

DesignMatrix build_design_matrix(const Formula& f, const LongitudinalDataset& data,
                                 const ColumnBindings& bindings);

// Variant with per-column value overrides (used to evaluate fitted models
// at counterfactual treatment histories).
DesignMatrix build_design_matrix(const Formula& f, const LongitudinalDataset& data,
                                 const ColumnBindings& bindings,
                                 const std::map<std::string, double>& overrides);

}  // namespace frontdoor
