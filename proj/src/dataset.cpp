#include "frontdoor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace frontdoor {

RegimeSpec RegimeSpec::parse(const std::string& text) {
  RegimeSpec r;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "0")
      r.values.push_back(0);
    else if (tok == "1")
      r.values.push_back(1);
    else
      throw std::invalid_argument("regime entries must be 0 or 1, got '" + tok + "'");
  }
  if (r.values.empty()) throw std::invalid_argument("empty regime");
  return r;
}

std::string RegimeSpec::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += values[i] ? '1' : '0';
  }
  return out;
}

LongitudinalDataset::LongitudinalDataset(std::vector<std::string> column_names,
                                         std::vector<std::vector<double>> columns,
                                         std::size_t horizon,
                                         std::vector<double> weights)
    : names_(std::move(column_names)),
      columns_(std::move(columns)),
      weights_(std::move(weights)),
      horizon_(horizon) {
  if (names_.size() != columns_.size())
    throw std::invalid_argument("column name/data count mismatch");
  if (columns_.empty()) throw std::invalid_argument("dataset has no columns");
  n_rows_ = columns_.front().size();
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (columns_[i].size() != n_rows_)
      throw std::invalid_argument("ragged column: " + names_[i]);
    if (!index_.emplace(names_[i], i).second)
      throw std::invalid_argument("duplicate column: " + names_[i]);
  }
  if (weights_.empty()) weights_.assign(n_rows_, 1.0);
  if (weights_.size() != n_rows_)
    throw std::invalid_argument("weight length mismatch");
  weight_sum_ = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("negative weight");
    weight_sum_ += w;
  }
  if (!(weight_sum_ > 0.0)) throw std::invalid_argument("weights sum to zero");
  for (std::size_t t = 0; t <= horizon_; ++t) {
    const auto& a = treatment(t);
    for (double v : a)
      if (v != 0.0 && v != 1.0)
        throw std::invalid_argument("non-binary treatment value in " + treatment_name(t));
  }
  (void)outcome();
}

bool LongitudinalDataset::has_column(const std::string& name) const {
  return index_.count(name) != 0;
}

const std::vector<double>& LongitudinalDataset::column(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no such column: " + name);
  return columns_[it->second];
}

std::vector<std::string> LongitudinalDataset::baseline_names() const {
  std::vector<std::string> out;
  for (const auto& n : names_) {
    if (n.rfind("L0_", 0) == 0 || n == "L0") out.push_back(n);
  }
  return out;
}

namespace {

// Shortest representation that round-trips a double.
std::string format_value(double v) {
  if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void LongitudinalDataset::write_csv(std::ostream& os) const {
  bool weighted = false;
  for (double w : weights_)
    if (w != 1.0) weighted = true;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (i) os << ',';
    os << names_[i];
  }
  if (weighted) os << ",W";
  os << '\n';
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) os << ',';
      os << format_value(columns_[i][r]);
    }
    if (weighted) os << ',' << format_value(weights_[r]);
    os << '\n';
  }
}

LongitudinalDataset LongitudinalDataset::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) names.push_back(tok);
  }
  bool weighted = !names.empty() && names.back() == "W";
  if (weighted) names.pop_back();
  std::vector<std::vector<double>> cols(names.size());
  std::vector<double> weights;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::size_t i = 0;
    while (std::getline(ss, tok, ',')) {
      double v;
      try {
        v = std::stod(tok);
      } catch (...) {
        throw std::runtime_error("CSV line " + std::to_string(lineno) +
                                 ": bad number '" + tok + "'");
      }
      if (i < names.size())
        cols[i].push_back(v);
      else if (weighted && i == names.size())
        weights.push_back(v);
      else
        throw std::runtime_error("CSV line " + std::to_string(lineno) + ": too many fields");
      ++i;
    }
    std::size_t expect = names.size() + (weighted ? 1 : 0);
    if (i != expect)
      throw std::runtime_error("CSV line " + std::to_string(lineno) + ": expected " +
                               std::to_string(expect) + " fields, got " + std::to_string(i));
  }
  std::size_t horizon = 0;
  bool any = false;
  for (const auto& n : names) {
    if (n.size() > 1 && n[0] == 'A' &&
        n.find_first_not_of("0123456789", 1) == std::string::npos) {
      horizon = std::max(horizon, static_cast<std::size_t>(std::stoul(n.substr(1))));
      any = true;
    }
  }
  if (!any) throw std::runtime_error("CSV has no treatment columns A0..AT");
  return LongitudinalDataset(std::move(names), std::move(cols), horizon, std::move(weights));
}

}  // namespace frontdoor
