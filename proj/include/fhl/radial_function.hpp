#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fhl {

// A radial profile g(r), r >= 0. Three representations:
//  - PowerSum: sum_k c_k r^{p_k}, defined on all of (0, inf);
//  - Sampled: piecewise linear through (r_i, g_i) on [0,1], zero for r >= 1;
//  - Callable: an arbitrary function, optionally declared exterior-zero.
class RadialFunction {
 public:
  enum class Kind { PowerSum, Sampled, Callable };

  struct Term {
    double coeff;
    double exponent;
  };

  static RadialFunction power(double exponent, double coeff = 1.0);
  static RadialFunction constant(double c);
  static RadialFunction power_sum(std::vector<Term> terms);
  static RadialFunction sampled(std::vector<double> nodes, std::vector<double> values);
  static RadialFunction callable(std::function<double(double)> fn, bool exterior_zero);

  RadialFunction operator+(const RadialFunction& other) const;
  RadialFunction scaled(double c) const;

  double operator()(double r) const;

  Kind kind() const { return kind_; }
  bool exterior_zero() const { return exterior_zero_; }
  std::span<const Term> terms() const { return terms_; }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> values() const { return values_; }
  // Slope of the sampled profile on element [nodes[e], nodes[e+1]].
  double slope(std::size_t e) const;
  // Value of the sampled profile at r, given that r lies in element e.
  double eval_in(std::size_t e, double r) const;
  bool identically_zero() const;

 private:
  Kind kind_ = Kind::PowerSum;
  bool exterior_zero_ = false;
  std::vector<Term> terms_;
  std::vector<double> nodes_;
  std::vector<double> values_;
  std::function<double(double)> fn_;
};

}  // namespace fhl
