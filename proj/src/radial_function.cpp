#include "fhl/radial_function.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fhl/errors.hpp"

namespace fhl {

RadialFunction RadialFunction::power(double exponent, double coeff) {
  return power_sum({Term{coeff, exponent}});
}

RadialFunction RadialFunction::constant(double c) { return power(0.0, c); }

RadialFunction RadialFunction::power_sum(std::vector<Term> terms) {
  RadialFunction g;
  g.kind_ = Kind::PowerSum;
  g.terms_ = std::move(terms);
  return g;
}

RadialFunction RadialFunction::sampled(std::vector<double> nodes, std::vector<double> values) {
  if (nodes.size() < 2 || nodes.size() != values.size()) {
    throw DomainError("sampled profile: need matching node/value arrays of length >= 2");
  }
  if (nodes.front() != 0.0 || nodes.back() != 1.0) {
    throw DomainError("sampled profile: nodes must run from 0 to 1");
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1])) throw DomainError("sampled profile: nodes must be strictly increasing");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("sampled profile: values must be finite");
  }
  if (values.back() != 0.0) throw DomainError("sampled profile: value at r = 1 must be 0 (exterior zero)");
  RadialFunction g;
  g.kind_ = Kind::Sampled;
  g.exterior_zero_ = true;
  g.nodes_ = std::move(nodes);
  g.values_ = std::move(values);
  return g;
}

RadialFunction RadialFunction::callable(std::function<double(double)> fn, bool exterior_zero) {
  RadialFunction g;
  g.kind_ = Kind::Callable;
  g.exterior_zero_ = exterior_zero;
  g.fn_ = std::move(fn);
  return g;
}

RadialFunction RadialFunction::operator+(const RadialFunction& other) const {
  if (kind_ == Kind::PowerSum && other.kind_ == Kind::PowerSum) {
    std::vector<Term> terms = terms_;
    terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
    return power_sum(std::move(terms));
  }
  if (kind_ == Kind::Sampled && other.kind_ == Kind::Sampled && nodes_ == other.nodes_) {
    std::vector<double> values = values_;
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values_[i];
    return sampled(nodes_, std::move(values));
  }
  RadialFunction lhs = *this;
  RadialFunction rhs = other;
  return callable([lhs, rhs](double r) { return lhs(r) + rhs(r); }, exterior_zero_ && other.exterior_zero_);
}

RadialFunction RadialFunction::scaled(double c) const {
  RadialFunction g = *this;
  switch (kind_) {
    case Kind::PowerSum:
      for (auto& t : g.terms_) t.coeff *= c;
      break;
    case Kind::Sampled:
      for (auto& v : g.values_) v *= c;
      break;
    case Kind::Callable: {
      auto fn = fn_;
      g.fn_ = [fn, c](double r) { return c * fn(r); };
      break;
    }
  }
  return g;
}

double RadialFunction::slope(std::size_t e) const {
  return (values_[e + 1] - values_[e]) / (nodes_[e + 1] - nodes_[e]);
}

double RadialFunction::eval_in(std::size_t e, double r) const {
  const double h = nodes_[e + 1] - nodes_[e];
  const double t = (r - nodes_[e]) / h;
  return values_[e] * (1.0 - t) + values_[e + 1] * t;
}

double RadialFunction::operator()(double r) const {
  switch (kind_) {
    case Kind::PowerSum: {
      double sum = 0.0;
      for (const auto& t : terms_) sum += t.exponent == 0.0 ? t.coeff : t.coeff * std::pow(r, t.exponent);
      return sum;
    }
    case Kind::Sampled: {
      if (r >= 1.0 || r < 0.0) return 0.0;
      auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
      const std::size_t e = static_cast<std::size_t>(it - nodes_.begin()) - 1;
      return eval_in(e, r);
    }
    case Kind::Callable:
      if (exterior_zero_ && r >= 1.0) return 0.0;
      return fn_(r);
  }
  return 0.0;
}

bool RadialFunction::identically_zero() const {
  switch (kind_) {
    case Kind::PowerSum:
      return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.coeff == 0.0; });
    case Kind::Sampled:
      return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    case Kind::Callable:
      return false;
  }
  return false;
}

}  // namespace fhl
