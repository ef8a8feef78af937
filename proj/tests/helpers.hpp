#pragma once

#include <vector>

#include "kdvlab/field.hpp"

namespace kdvlab::test {

/// Random real mean-zero band-limited field with |u_hat(k)| ~ amp / k^decay.
inline FourierField random_field(int K, Rng& rng, double amp = 0.5, double decay = 1.0) {
  FourierField u(K);
  for (int k = 1; k <= K; ++k) {
    double scale = amp / std::pow(static_cast<double>(k), decay);
    u.set_coeff(k, cplx(normal(rng), normal(rng)) * (scale / std::sqrt(2.0)));
  }
  return u;
}

/// Trapezoidal quadrature of a periodic grid function over [0, 2 pi];
/// exact for band-limited integrands resolved by the grid.
inline double quadrature(const std::vector<double>& samples) {
  double s = 0.0;
  for (double v : samples) s += v;
  return s * two_pi / static_cast<double>(samples.size());
}

inline double max_coeff_diff(const FourierField& a, const FourierField& b) {
  int K = std::max(a.max_freq(), b.max_freq());
  double m = 0.0;
  for (int k = 1; k <= K; ++k) m = std::max(m, std::abs(a.coeff(k) - b.coeff(k)));
  return m;
}

}  // namespace kdvlab::test
