#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace kdvlab {

inline constexpr double two_pi = 6.283185307179586476925286766559;
inline constexpr double pi = 3.1415926535897932384626433832795;

using cplx = std::complex<double>;

/// Quintic smoothstep: 0 at t<=0, 1 at t>=1, C^2 at both joins.
inline double smoothstep5(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// e^{i k^3 t} with the argument reduced in extended precision.
/// k^3 t can reach ~1e7 at desk scale; reducing mod 2*pi in double alone
/// would cost ~1e-10 of phase accuracy, which the linear-propagation
/// diagnostics can see.
inline cplx cis_cubic_phase(std::int64_t k, double t) {
  long double arg = static_cast<long double>(k) * static_cast<long double>(k) *
                    static_cast<long double>(k) * static_cast<long double>(t);
  const long double tp = 6.283185307179586476925286766559005768L;
  arg = std::fmod(arg, tp);
  return {static_cast<double>(std::cos(arg)), static_cast<double>(std::sin(arg))};
}

/// Compensated (Kahan) accumulator for long multilinear sums.
class KahanSum {
 public:
  void add(double x) {
    double y = x - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class KahanSumC {
 public:
  void add(cplx z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  cplx value() const { return {re_.value(), im_.value()}; }

 private:
  KahanSum re_, im_;
};

/// Shortest round-trip decimal for a double (used by the CSV writers).
inline std::string format_double(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, res.ptr);
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Deterministic RNG used everywhere randomness is needed.
using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline double normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

/// Ordinary least squares y = a + b x; returns {intercept, slope, r_squared}.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssres = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ssres += r * r;
  }
  f.r_squared = (syy > 0) ? 1.0 - ssres / syy : 1.0;
  return f;
}

}  // namespace kdvlab
