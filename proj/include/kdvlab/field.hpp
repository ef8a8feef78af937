#pragma once

// Band-limited real mean-zero fields on the circle R/2piZ, stored as the
// Fourier coefficients u_hat(k) for k = 1..K under the convention
//
//   u_hat(k) = (1/2pi) \int_0^{2pi} u(x) e^{-ikx} dx,
//   u(x)     = \sum_k u_hat(k) e^{ikx},
//
// with u_hat(-k) = conj(u_hat(k)) implied and u_hat(0) = 0 always.
// Products are computed by exact convolution (fields are trigonometric
// polynomials, so no aliasing ever enters).

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "kdvlab/numeric.hpp"

namespace kdvlab {

class FourierField {
 public:
  FourierField() = default;
  explicit FourierField(int max_freq) : max_freq_(max_freq), coeffs_(static_cast<std::size_t>(std::max(0, max_freq))) {
    if (max_freq < 0) throw std::invalid_argument("FourierField: max_freq must be >= 0");
  }

  static FourierField zero(int max_freq) { return FourierField(max_freq); }

  int max_freq() const { return max_freq_; }

  /// u_hat(k) for any integer k; 0 beyond the band and at k = 0.
  cplx coeff(int k) const {
    int a = std::abs(k);
    if (a == 0 || a > max_freq_) return {0.0, 0.0};
    cplx c = coeffs_[static_cast<std::size_t>(a - 1)];
    return k > 0 ? c : std::conj(c);
  }

  void set_coeff(int k, cplx value) {
    if (k < 1 || k > max_freq_) throw std::out_of_range("FourierField::set_coeff: k outside 1..K");
    coeffs_[static_cast<std::size_t>(k - 1)] = value;
  }

  void add_coeff(int k, cplx value) { set_coeff(k, coeff(k) + value); }

  const std::vector<cplx>& coeffs() const { return coeffs_; }

  bool is_finite() const {
    for (const cplx& c : coeffs_)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
  }

  /// Same field viewed in a band of size at least the current one.
  FourierField extended(int new_max_freq) const {
    if (new_max_freq < max_freq_) throw std::invalid_argument("extended: band may only grow");
    FourierField out(new_max_freq);
    std::copy(coeffs_.begin(), coeffs_.end(), out.coeffs_.begin());
    return out;
  }

  /// Sharp restriction to |k| <= new_max_freq.
  FourierField truncated(int new_max_freq) const {
    FourierField out(new_max_freq);
    int n = std::min(new_max_freq, max_freq_);
    std::copy(coeffs_.begin(), coeffs_.begin() + n, out.coeffs_.begin());
    return out;
  }

  FourierField& operator+=(const FourierField& o) {
    if (o.max_freq_ > max_freq_) throw std::invalid_argument("operator+=: band mismatch");
    for (int k = 1; k <= o.max_freq_; ++k) coeffs_[k - 1] += o.coeffs_[k - 1];
    return *this;
  }
  FourierField& operator-=(const FourierField& o) {
    if (o.max_freq_ > max_freq_) throw std::invalid_argument("operator-=: band mismatch");
    for (int k = 1; k <= o.max_freq_; ++k) coeffs_[k - 1] -= o.coeffs_[k - 1];
    return *this;
  }
  FourierField& operator*=(double a) {
    for (auto& c : coeffs_) c *= a;
    return *this;
  }

  friend FourierField operator+(FourierField a, const FourierField& b) {
    if (b.max_freq() > a.max_freq()) {
      FourierField c = a.extended(b.max_freq());
      c += b;
      return c;
    }
    a += b;
    return a;
  }
  friend FourierField operator-(FourierField a, const FourierField& b) {
    if (b.max_freq() > a.max_freq()) {
      FourierField c = a.extended(b.max_freq());
      c -= b;
      return c;
    }
    a -= b;
    return a;
  }
  friend FourierField operator*(double a, FourierField f) {
    f *= a;
    return f;
  }

 private:
  int max_freq_ = 0;
  std::vector<cplx> coeffs_;
};

/// Convenience constructor: a cos(kx) + b sin(kx) contributes (a - ib)/2 at k.
inline FourierField cosine_field(int K, std::initializer_list<std::pair<int, double>> cos_modes) {
  FourierField f(K);
  for (auto [k, a] : cos_modes) f.add_coeff(k, cplx(a / 2.0, 0.0));
  return f;
}

// ---------------------------------------------------------------------------
// Multipliers

/// Real even symbol on frequencies, evaluated on the reals so that the
/// multilinear-symbol machinery can probe it off the integer lattice.
/// The sharp cutoff uses the half-integer threshold N + 1/2, which agrees
/// with chi_{|k| <= N} on integers and stays continuous near them.
class Multiplier {
 public:
  enum class Kind { identity, sharp_cutoff, bump_b, imethod_m, custom };

  Multiplier() : kind_(Kind::identity), fn_([](double) { return 1.0; }) {}

  static Multiplier identity() { return Multiplier(); }

  static Multiplier sharp_cutoff(double N) {
    Multiplier m;
    m.kind_ = Kind::sharp_cutoff;
    m.n_ = N;
    m.fn_ = [N](double a) { return a <= N + 0.5 ? 1.0 : 0.0; };
    return m;
  }

  /// b(k) = 1 on [-N/2, N/2], 0 outside (-N, N), quintic smoothstep between.
  static Multiplier bump_b(int N) {
    if (N < 2 || N % 2 != 0) throw std::invalid_argument("bump_b: N must be a positive even integer >= 2");
    Multiplier m;
    m.kind_ = Kind::bump_b;
    m.n_ = N;
    double half = N / 2.0;
    m.fn_ = [N, half](double a) {
      if (a <= half) return 1.0;
      if (a >= N) return 0.0;
      return smoothstep5((N - a) / half);
    };
    return m;
  }

  /// I-method weight: 1 on [-A, A], (|k|/A)^s beyond 2A, C^2 in between
  /// (the exponent is smoothstepped in log |k|).
  static Multiplier imethod_m(double A, double s) {
    if (A < 2.0) throw std::invalid_argument("imethod_m: A must be >= 2");
    Multiplier m;
    m.kind_ = Kind::imethod_m;
    m.n_ = A;
    m.s_ = s;
    m.fn_ = [A, s](double a) {
      if (a <= A) return 1.0;
      double r = a / A;
      if (a >= 2.0 * A) return std::pow(r, s);
      double t = std::log2(r);
      return std::pow(r, s * smoothstep5(t));
    };
    return m;
  }

  static Multiplier custom(std::function<double(double)> even_fn) {
    Multiplier m;
    m.kind_ = Kind::custom;
    m.fn_ = std::move(even_fn);
    return m;
  }

  double operator()(double k) const { return fn_(std::abs(k)); }

  Kind kind() const { return kind_; }
  double param() const { return n_; }
  double sobolev_index() const { return s_; }

  /// Pointwise product of two symbols (e.g. b^2, or b restricted to a band).
  friend Multiplier operator*(const Multiplier& a, const Multiplier& b) {
    Multiplier m;
    m.kind_ = Kind::custom;
    auto fa = a.fn_, fb = b.fn_;
    m.fn_ = [fa, fb](double x) { return fa(x) * fb(x); };
    return m;
  }

  /// 1 - this symbol.
  Multiplier complement() const {
    Multiplier m;
    m.kind_ = Kind::custom;
    auto f = fn_;
    m.fn_ = [f](double x) { return 1.0 - f(x); };
    return m;
  }

 private:
  Kind kind_ = Kind::identity;
  double n_ = 0.0;
  double s_ = 0.0;
  std::function<double(double)> fn_;
};

inline Multiplier bump_b(int N) { return Multiplier::bump_b(N); }
inline Multiplier sharp_cutoff(double N) { return Multiplier::sharp_cutoff(N); }

inline FourierField apply_multiplier(const Multiplier& m, const FourierField& u) {
  FourierField out(u.max_freq());
  for (int k = 1; k <= u.max_freq(); ++k) out.set_coeff(k, m(k) * u.coeff(k));
  return out;
}

// ---------------------------------------------------------------------------
// Transforms

/// Grid samples u(x_j), x_j = 2 pi j / M.  Requires M >= 2K + 2 so the field
/// is recoverable from the samples.
inline std::vector<double> synthesize(const FourierField& u, int M) {
  if (M < 2 * u.max_freq() + 2) throw std::invalid_argument("synthesize: grid too small, need M >= 2K + 2");
  if (!u.is_finite()) throw std::invalid_argument("synthesize: non-finite coefficients");
  std::vector<double> out(static_cast<std::size_t>(M), 0.0);
  for (int j = 0; j < M; ++j) {
    double x = two_pi * j / M;
    double s = 0.0;
    for (int k = 1; k <= u.max_freq(); ++k) {
      cplx c = u.coeff(k);
      s += 2.0 * (c.real() * std::cos(k * x) - c.imag() * std::sin(k * x));
    }
    out[static_cast<std::size_t>(j)] = s;
  }
  return out;
}

struct AnalyzeResult {
  FourierField field;
  double mean = 0.0;  // the discarded k = 0 coefficient
};

/// Discrete version of the 1/2pi transform; exact for band-limited samples.
inline AnalyzeResult analyze(std::span<const double> samples, int K) {
  int M = static_cast<int>(samples.size());
  if (M < 2 * K + 2) throw std::invalid_argument("analyze: need at least 2K + 2 samples");
  for (double v : samples)
    if (!std::isfinite(v)) throw std::invalid_argument("analyze: non-finite input");
  AnalyzeResult res;
  res.field = FourierField(K);
  double mean = 0.0;
  for (double v : samples) mean += v;
  res.mean = mean / M;
  for (int k = 1; k <= K; ++k) {
    double re = 0.0, im = 0.0;
    for (int j = 0; j < M; ++j) {
      double x = two_pi * j / M;
      re += samples[static_cast<std::size_t>(j)] * std::cos(k * x);
      im -= samples[static_cast<std::size_t>(j)] * std::sin(k * x);
    }
    res.field.set_coeff(k, cplx(re / M, im / M));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Calculus and norms

/// (ik)^order on each mode; negative order is the mean-zero antiderivative.
inline FourierField derivative(const FourierField& u, int order) {
  FourierField out(u.max_freq());
  for (int k = 1; k <= u.max_freq(); ++k) {
    cplx ik(0.0, static_cast<double>(k));
    cplx factor = order >= 0 ? std::pow(ik, order) : 1.0 / std::pow(ik, -order);
    out.set_coeff(k, factor * u.coeff(k));
  }
  return out;
}

/// sqrt(2 pi sum_{k != 0} <k>^{2s} |u_hat(k)|^2), <k> = (1 + k^2)^{1/2}.
inline double sobolev_norm(const FourierField& u, double s) {
  double acc = 0.0;
  for (int k = 1; k <= u.max_freq(); ++k) {
    double w = std::pow(1.0 + static_cast<double>(k) * k, s);
    acc += w * std::norm(u.coeff(k));
  }
  return std::sqrt(two_pi * 2.0 * acc);
}

/// L^2(T) pairing \int u v dx of two mean-zero fields.
inline double l2_inner(const FourierField& u, const FourierField& v) {
  double acc = 0.0;
  int K = std::min(u.max_freq(), v.max_freq());
  for (int k = 1; k <= K; ++k) acc += (u.coeff(k) * std::conj(v.coeff(k))).real();
  return two_pi * 2.0 * acc;
}

struct Product {
  FourierField field;  // the mean-zero part of u v
  double mean = 0.0;   // P_0(u v)
};

/// Exact convolution of two fields, truncated to |k| <= K_out; the mean of
/// the product is reported separately so P_0(v^2) stays available.
inline Product product(const FourierField& u, const FourierField& v, int K_out) {
  Product res;
  res.field = FourierField(K_out);
  int Ku = u.max_freq(), Kv = v.max_freq();
  for (int k = 1; k <= K_out; ++k) {
    if (k > Ku + Kv) break;
    cplx acc(0.0, 0.0);
    int lo = std::max(-Ku, k - Kv);
    int hi = std::min(Ku, k + Kv);
    for (int k1 = lo; k1 <= hi; ++k1) {
      if (k1 == 0 || k1 == k) continue;
      acc += u.coeff(k1) * v.coeff(k - k1);
    }
    res.field.set_coeff(k, acc);
  }
  double m = 0.0;
  int K = std::min(Ku, Kv);
  for (int k = 1; k <= K; ++k) m += 2.0 * (u.coeff(k) * std::conj(v.coeff(k))).real();
  res.mean = m;
  return res;
}

/// Mean-zero square (1 - P_0)(v^2) to band K_out, plus its mean.
inline Product square(const FourierField& v, int K_out) { return product(v, v, K_out); }

// ---------------------------------------------------------------------------
// Serialization: {"K": int, "coeffs": [[re, im], ...] for k = 1..K}

inline nlohmann::json field_to_json(const FourierField& u) {
  nlohmann::json j;
  j["K"] = u.max_freq();
  auto arr = nlohmann::json::array();
  for (int k = 1; k <= u.max_freq(); ++k) {
    cplx c = u.coeff(k);
    arr.push_back({c.real(), c.imag()});
  }
  j["coeffs"] = arr;
  return j;
}

inline FourierField field_from_json(const nlohmann::json& j) {
  int K = j.at("K").get<int>();
  const auto& arr = j.at("coeffs");
  if (static_cast<int>(arr.size()) != K) throw std::invalid_argument("field_from_json: coeffs length != K");
  FourierField u(K);
  for (int k = 1; k <= K; ++k) {
    u.set_coeff(k, cplx(arr[k - 1][0].get<double>(), arr[k - 1][1].get<double>()));
  }
  if (!u.is_finite()) throw std::invalid_argument("field_from_json: non-finite coefficient");
  return u;
}

}  // namespace kdvlab
