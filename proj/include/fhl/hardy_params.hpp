#pragma once

#include <span>
#include <utility>
#include <vector>

namespace fhl {

// Dimension N >= 2 and fractional order s in (0,1), with N > 2s.
class FracParams {
 public:
  FracParams(int N, double s);

  int N() const { return n_; }
  double s() const { return s_; }
  double dim() const { return static_cast<double>(n_); }
  // (N - 2s) / 2, the upper end of the admissible alpha range.
  double half_gap() const { return 0.5 * (n_ - 2.0 * s_); }

 private:
  int n_;
  double s_;
};

// lambda = lambda(alpha), gamma = (N-2s)/2 - alpha, gamma_bar = (N-2s)/2 + alpha.
struct HardyCoupling {
  double lambda = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double gamma_bar = 0.0;
};

struct SummabilityPoint {
  double m = 0.0;
  double J = 0.0;
  double P = 0.0;
  double m_star_star = 0.0;
  double m_star = 0.0;
  double alpha0 = 0.0;
  double D = 0.0;       // D(m) = P/2^{2s} * m^2/((m-1)(N-2sm))
  bool near_pole = false;
  bool violates_order = false;  // J > P
};

struct CurveComparison {
  std::vector<SummabilityPoint> points;
  double theta = 0.0;           // Theta(N,s) = D at the left endpoint
  bool J_le_P = true;
  bool D_nondecreasing = true;
  bool D_ge_theta = true;
};

// Left endpoint 2N/(N+2s) of the curve domain.
double curve_left_endpoint(const FracParams& p);
// Right (open) endpoint N/(2s).
double curve_right_endpoint(const FracParams& p);

double hardy_constant(const FracParams& p);
// a_{N,s} = (int (1 - cos xi_1) |xi|^{-N-2s} dxi)^{-1} = 2^{2s} pi^{-N/2} Gamma((N+2s)/2) / |Gamma(-s)|,
// the constant for which (a/2) times the Gagliardo integral equals int |xi|^{2s} |F u|^2.
double normalization_constant(const FracParams& p);
// Surface area of the unit sphere S^{N-1}.
double sphere_area(int N);

double lambda_of_alpha(const FracParams& p, double alpha);
double alpha_of_lambda(const FracParams& p, double lambda);
HardyCoupling coupling(const FracParams& p, double lambda);

double ground_state_shift(const FracParams& p, double gamma);
// mu(beta) with (-Delta)^s |x|^{-beta} = mu(beta) |x|^{-beta-2s}, 0 < beta < N-2s.
double power_multiplier(const FracParams& p, double beta);

double curve_J(const FracParams& p, double m);
double curve_P(const FracParams& p, double m);
// alpha_0(m) = (N+2s)/2 - N/m.
double alpha0_of_m(const FracParams& p, double m);
// True when N/(2m) - s < 1e-6 and curve_P carries no meaningful digits.
bool curve_P_near_pole(const FracParams& p, double m);
double curve_D(const FracParams& p, double m);
double curve_theta(const FracParams& p);
CurveComparison curve_comparison(const FracParams& p, std::span<const double> m_grid);

double digamma_combination(const FracParams& p, double m);
double critical_exponent(const FracParams& p, double lambda);
// (m**_s, m*_s) = (mN/(N-2ms), mN/(N-ms)).
std::pair<double, double> sobolev_exponents(const FracParams& p, double m);

double algebraic_inequality_gap(double s1, double s2, double a);

}  // namespace fhl
