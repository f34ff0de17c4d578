#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "pdommd/grid.hpp"

namespace pdommd {

enum class FourierDirection { forward, inverse };

namespace detail {

// In-place radix-2 Cooley-Tukey on n = 2^k points with the kernel
// e^{sign * 2*pi*i*jk/n}, sign = -1 forward, +1 inverse. No 1/n factor.
inline void fft_pow2(cxd* data, int n, long stride, int sign) {
  // bit-reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * kTwoPi / len;
    const cxd wl = std::polar(1.0, ang);
    for (int i = 0; i < n; i += len) {
      cxd w{1.0, 0.0};
      for (int k = 0; k < len / 2; ++k) {
        cxd& a = data[(i + k) * stride];
        cxd& b = data[(i + k + len / 2) * stride];
        const cxd t = b * w;
        b = a - t;
        a += t;
        w *= wl;
      }
    }
  }
}

// exact value of e^{sign*i*pi*n/2} for integer n
inline cxd quarter_phase(int n, int sign) {
  switch (((n % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return sign > 0 ? cxd{0, 1} : cxd{0, -1};
    case 2: return {-1, 0};
    default: return sign > 0 ? cxd{0, -1} : cxd{0, 1};
  }
}

// One axis of the unitary continuous-transform approximation. With lattice
// x_j = -W + j h and dual lattice y_k = -pi/h + k pi/W, the phase splits as
// e^{-i y_k x_j} = e^{-i pi N/2} (-1)^j (-1)^k e^{-2 pi i jk/N}, so the
// continuous transform becomes twist -> FFT -> twist -> constant.
inline void transform_axis(cxd* line, int n, long stride, FourierDirection dir,
                           double spacing_in) {
  const int sign = dir == FourierDirection::forward ? -1 : +1;
  for (int j = 1; j < n; j += 2) line[j * stride] = -line[j * stride];
  fft_pow2(line, n, stride, sign);
  const cxd c = spacing_in / std::sqrt(kTwoPi) * quarter_phase(n / 2, sign);
  for (int k = 0; k < n; ++k) {
    cxd v = line[k * stride] * c;
    line[k * stride] = (k & 1) ? -v : v;
  }
}

}  // namespace detail

/**
 * Unitary Fourier transform with angular frequency,
 *   forward:  (2 pi)^(-d/2) Int f(x) e^(-i y.x) dx,
 *   inverse:  (2 pi)^(-d/2) Int f(y) e^(+i x.y) dy,
 * realized as the exact discrete sum over the input lattice, evaluated on the
 * dual lattice. inverse(forward(f)) == f to rounding, and the quadrature L2
 * norm is preserved exactly.
 */
inline GridFunction fourier(const GridFunction& f, FourierDirection dir) {
  const Grid& g = f.grid;
  GridFunction out(dual_grid(g));
  out.values = f.values;
  const int n = g.points_per_axis;
  if (g.dim == 1) {
    detail::transform_axis(out.values.data(), n, 1, dir, g.spacing);
  } else {
    for (int r = 0; r < n; ++r)
      detail::transform_axis(out.values.data() + static_cast<long>(r) * n, n, 1,
                             dir, g.spacing);
    for (int c = 0; c < n; ++c)
      detail::transform_axis(out.values.data() + c, n, n, dir, g.spacing);
  }
  check_finite(out, "fourier");
  return out;
}

}  // namespace pdommd
