#pragma once

// Real special functions used by the closed-form Hardy constants.
// Every function is pure; poles and domain violations throw instead of
// returning NaN.

namespace fhl::specfun {

inline constexpr double kEulerGamma = 0.57721566490153286061;

// Gamma(x). Throws PoleError at non-positive integers and OverflowError
// when the result exceeds the double range (x > 171.6).
double gamma(double x);

// log Gamma(x) for x > 0. Finite for every positive double.
double ln_gamma(double x);

// psi(x) = Gamma'(x)/Gamma(x) for x > 0, via upward recurrence and the
// asymptotic expansion.
double digamma(double x);

// Reference evaluation of psi through the series
//   psi(t) = -1/t - C0 + t * sum_{n>=1} 1/(n(n+t)),
// truncated adaptively with an Euler-Maclaurin estimate of the tail.
double digamma_series(double t, double tol = 1e-14);

double euler_constant();

}  // namespace fhl::specfun
