#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace frontdoor {

// Fixed treatment history a_0..a_T.
struct RegimeSpec {
  std::vector<int> values;

  std::size_t horizon() const { return values.empty() ? 0 : values.size() - 1; }

  static RegimeSpec parse(const std::string& text);  // "1,1" or "0,0"
  std::string to_string() const;
};

// Rectangular longitudinal data: baseline columns, binary A_t/M_t, outcome Y,
// optional row weights. Column-major storage, immutable after construction.
class LongitudinalDataset {
 public:
  LongitudinalDataset(std::vector<std::string> column_names,
                      std::vector<std::vector<double>> columns,
                      std::size_t horizon,
                      std::vector<double> weights = {});

  std::size_t n_rows() const { return n_rows_; }
  std::size_t horizon() const { return horizon_; }

  bool has_column(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;
  const std::vector<std::string>& column_names() const { return names_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight_sum() const { return weight_sum_; }

  // Canonical names for the single-mediator layout used throughout.
  std::string treatment_name(std::size_t t) const { return "A" + std::to_string(t); }
  std::string mediator_name(std::size_t t) const { return "M" + std::to_string(t); }

  const std::vector<double>& treatment(std::size_t t) const { return column(treatment_name(t)); }
  const std::vector<double>& mediator(std::size_t t) const { return column(mediator_name(t)); }
  const std::vector<double>& outcome() const { return column("Y"); }

  std::vector<std::string> baseline_names() const;

  void write_csv(std::ostream& os) const;
  static LongitudinalDataset read_csv(std::istream& is);

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::map<std::string, std::size_t> index_;
  std::vector<double> weights_;
  std::size_t n_rows_ = 0;
  std::size_t horizon_ = 0;
  double weight_sum_ = 0.0;
};

}  // namespace frontdoor
