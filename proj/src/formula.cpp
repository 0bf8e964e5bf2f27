#include "frontdoor/formula.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace frontdoor {

std::string Term::label() const {
  if (columns.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += '*';
    out += columns[i];
  }
  return out;
}

namespace {

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("formula syntax error at byte offset " + std::to_string(pos) +
                                ": " + msg);
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  std::string identifier() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    if (pos == start) fail("expected a variable name");
    return text.substr(start, pos - start);
  }

  // var ("*" var)*  — a single term, possibly a product
  Term product() {
    Term t;
    t.columns.push_back(identifier());
    while (eat('*')) t.columns.push_back(identifier());
    return t;
  }

  std::vector<Term> sum(bool products_allowed) {
    std::vector<Term> terms;
    terms.push_back(products_allowed ? product() : Term{{identifier()}});
    while (eat('+'))
      terms.push_back(products_allowed ? product() : Term{{identifier()}});
    return terms;
  }
};

// order columns within a term by first appearance in the source term list
void canonicalize(std::vector<Term>& terms) {
  std::vector<std::string> first_seen;
  auto rank = [&](const std::string& c) {
    for (std::size_t i = 0; i < first_seen.size(); ++i)
      if (first_seen[i] == c) return i;
    first_seen.push_back(c);
    return first_seen.size() - 1;
  };
  for (auto& t : terms)
    for (const auto& c : t.columns) (void)rank(c);
  for (auto& t : terms)
    std::sort(t.columns.begin(), t.columns.end(),
              [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
}

}  // namespace

Formula Formula::parse(const std::string& text) {
  Parser p(text);
  p.skip_ws();
  if (p.pos >= text.size()) p.fail("empty formula");

  std::vector<Term> parsed;
  bool squared = false;
  if (p.eat('(')) {
    p.skip_ws();
    if (p.pos < text.size() && text[p.pos] == ')') p.fail("empty parenthesis");
    parsed = p.sum(/*products_allowed=*/false);
    if (!p.eat(')')) p.fail("expected ')'");
    if (!p.eat('^')) p.fail("expected '^2' after ')'");
    if (!p.eat('2')) p.fail("only '^2' is supported");
    squared = true;
  } else {
    parsed = p.sum(/*products_allowed=*/true);
  }
  p.skip_ws();
  if (p.pos < text.size()) p.fail("unexpected trailing input");

  Formula f;
  f.terms_.push_back(Term{});  // intercept
  if (squared) {
    std::vector<std::string> vars;
    for (const auto& t : parsed) {
      if (std::find(vars.begin(), vars.end(), t.columns[0]) != vars.end())
        p.fail("duplicate variable '" + t.columns[0] + "' inside (...)^2");
      vars.push_back(t.columns[0]);
    }
    for (const auto& v : vars) f.terms_.push_back(Term{{v}});
    for (std::size_t i = 0; i < vars.size(); ++i)
      for (std::size_t j = i + 1; j < vars.size(); ++j)
        f.terms_.push_back(Term{{vars[i], vars[j]}});
  } else {
    for (auto& t : parsed) f.terms_.push_back(std::move(t));
  }
  canonicalize(f.terms_);
  for (std::size_t i = 0; i < f.terms_.size(); ++i)
    for (std::size_t j = i + 1; j < f.terms_.size(); ++j)
      if (f.terms_[i] == f.terms_[j])
        throw std::invalid_argument("duplicate term '" + f.terms_[i].label() + "'");
  f.source_ = text;
  return f;
}

std::string Formula::print() const {
  std::string out;
  bool first = true;
  for (const auto& t : terms_) {
    if (t.is_intercept()) continue;
    if (!first) out += " + ";
    out += t.label();
    first = false;
  }
  if (out.empty()) out = "1";
  return out;
}

ColumnBindings default_bindings(const LongitudinalDataset& data) {
  ColumnBindings b;
  for (const auto& name : data.column_names()) b[name] = name;
  // L1, L2, ... alias the canonical baseline columns L0_1, L0_2, ...
  for (const auto& name : data.column_names()) {
    if (name.rfind("L0_", 0) == 0) b["L" + name.substr(3)] = name;
  }
  return b;
}

DesignMatrix build_design_matrix(const Formula& f, const LongitudinalDataset& data,
                                 const ColumnBindings& bindings) {
  return build_design_matrix(f, data, bindings, {});
}

DesignMatrix build_design_matrix(const Formula& f, const LongitudinalDataset& data,
                                 const ColumnBindings& bindings,
                                 const std::map<std::string, double>& overrides) {
  const std::size_t n = data.n_rows();
  DesignMatrix d;
  d.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f.n_terms()));
  for (std::size_t j = 0; j < f.n_terms(); ++j) {
    const Term& t = f.terms()[j];
    d.labels.push_back(t.label());
    Eigen::VectorXd col = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    for (const auto& var : t.columns) {
      auto bound = bindings.find(var);
      if (bound == bindings.end())
        throw std::invalid_argument("unbound variable '" + var + "' in formula");
      auto ov = overrides.find(bound->second);
      if (ov != overrides.end()) {
        col *= ov->second;
      } else {
        const auto& src = data.column(bound->second);
        for (std::size_t r = 0; r < n; ++r) col[static_cast<Eigen::Index>(r)] *= src[r];
      }
    }
    d.values.col(static_cast<Eigen::Index>(j)) = col;
  }
  return d;
}

}  // namespace frontdoor
