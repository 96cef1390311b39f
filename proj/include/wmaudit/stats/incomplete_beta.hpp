#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "wmaudit/error.hpp"

namespace wmaudit::stats {

inline constexpr int kBetaMaxIterations = 200;
inline constexpr double kBetaTolerance = 1e-14;

namespace detail {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIterations; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kBetaTolerance) break;
  }
  return h;
}

// log of x^a (1-x)^b / (a B(a,b)), with y = 1 - x supplied separately.
inline double log_front(double a, double b, double x, double y) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y) -
         std::log(a);
}

inline void check_args(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    fail(ErrorKind::invalid_input, "incomplete beta needs positive finite shape parameters");
  }
  if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0)) {
    fail(ErrorKind::invalid_input, "incomplete beta argument outside [0, 1]");
  }
}

}  // namespace detail

/// Natural log of the regularized incomplete beta I_x(a, b). `y` must equal
/// 1 - x; passing it separately keeps precision when x is close to 1.
inline double log_ibeta(double a, double b, double x, double y) {
  detail::check_args(a, b, x, y);
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (y == 0.0) return 0.0;
  if (x <= (a + 1.0) / (a + b + 2.0)) {
    return detail::log_front(a, b, x, y) + std::log(detail::beta_continued_fraction(a, b, x));
  }
  double comp = std::exp(detail::log_front(b, a, y, x)) * detail::beta_continued_fraction(b, a, y);
  return std::log1p(-comp);
}

inline double ibeta(double a, double b, double x, double y) {
  detail::check_args(a, b, x, y);
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  if (x <= (a + 1.0) / (a + b + 2.0)) {
    return std::exp(detail::log_front(a, b, x, y)) * detail::beta_continued_fraction(a, b, x);
  }
  return 1.0 - std::exp(detail::log_front(b, a, y, x)) * detail::beta_continued_fraction(b, a, y);
}

inline double ibeta(double a, double b, double x) { return ibeta(a, b, x, 1.0 - x); }

namespace detail {

inline void check_t_args(double t, double df) {
  if (!std::isfinite(t)) fail(ErrorKind::invalid_input, "t statistic must be finite");
  if (!(df > 0.0)) fail(ErrorKind::invalid_input, "degrees of freedom must be positive");
}

}  // namespace detail

/// Upper tail P(T >= t) of Student's t with df degrees of freedom.
inline double t_tail(double t, double df) {
  detail::check_t_args(t, df);
  if (t == 0.0) return 0.5;
  double t2 = t * t;
  double x = df / (df + t2);
  double y = 1.0 / (1.0 + df / t2);
  double half = 0.5 * ibeta(0.5 * df, 0.5, x, y);
  return t > 0.0 ? half : 1.0 - half;
}

/// ln P(T >= t); stays finite far beyond where t_tail underflows to 0.
inline double log_t_tail(double t, double df) {
  detail::check_t_args(t, df);
  if (t == 0.0) return std::log(0.5);
  double t2 = t * t;
  double x = df / (df + t2);
  double y = 1.0 / (1.0 + df / t2);
  if (t > 0.0) return std::log(0.5) + log_ibeta(0.5 * df, 0.5, x, y);
  return std::log1p(-0.5 * ibeta(0.5 * df, 0.5, x, y));
}

}  // namespace wmaudit::stats
