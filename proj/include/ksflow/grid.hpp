#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ksflow {

using cplx = std::complex<double>;

// Periodic box [-L, L)^d sampled on n points per axis, with the matching
// wavenumber table xi_m = (pi/L) m, m in [-n/2, n/2).
struct Grid {
  int d = 1;
  int n = 0;
  double half_length = 0.0;  // L
  double h = 0.0;            // spacing 2L/n
  std::vector<double> xs;    // per-axis sample points, size n
  std::vector<double> xis;   // per-axis wavenumbers in FFT index order, size n

  static Grid make(int d, int n, double half_length);

  std::size_t size() const;               // n^d
  double cell() const;                    // h^d quadrature weight
  double coord(std::size_t flat, int axis) const;
  bool operator==(const Grid& other) const {
    return d == other.d && n == other.n && half_length == other.half_length;
  }
};

struct GridFunction {
  const Grid* grid = nullptr;
  std::vector<cplx> v;

  GridFunction() = default;
  explicit GridFunction(const Grid& g) : grid(&g), v(g.size(), cplx{0.0, 0.0}) {}
  GridFunction(const Grid& g, std::vector<cplx> values) : grid(&g), v(std::move(values)) {
    if (v.size() != g.size()) throw std::invalid_argument("GridFunction: shape mismatch");
  }
};

enum class PotentialKind { none, delta, riesz };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::none;
  double riesz_a = 0.0;  // v(x) = |x|^{-a}, requires a in (1, d)
};

// Discrete transforms with the unitary continuum-sampling convention:
// coefficients approximate (2 pi)^{-d/2} \int f e^{-i xi x} dx, stored in FFT
// index order, so that the weighted spectral l2 norm equals the grid L2 norm.
GridFunction forward_transform(const GridFunction& f);
GridFunction inverse_transform(const GridFunction& c);

// e^{i Delta t} on orbitals: multiplier e^{-i t |xi|^2}.
GridFunction apply_free_propagator(const GridFunction& f, double t);

GridFunction derivative(const GridFunction& f, int axis);

// Fourier multiplier (1 + |xi|^2)^{b/2}.
GridFunction bessel_weight(const GridFunction& f, int b);

// f(x - shift), spectral translation (exact for whole grid steps).
GridFunction translate(const GridFunction& f, const std::vector<double>& shift);

// v * rho. riesz uses the continuum symbol c_{d,a} |xi|^{a-d}; the zero mode
// is set to the symbol value at the first nonzero mode, c_{d,a} (pi/L)^{a-d}.
GridFunction convolve_potential(const GridFunction& rho, const PotentialSpec& spec);

double riesz_symbol_constant(int d, double a);

double lp_norm(const GridFunction& f, double p);  // p = inf -> max modulus

cplx inner(const GridFunction& a, const GridFunction& b);  // h^d sum conj(a) b
double l2_norm(const GridFunction& f);

// Fraction of |f|-mass (L1 of |f|) within distance L/4 of the box boundary.
double boundary_mass_fraction(const GridFunction& rho);

GridFunction multiply_pointwise(const GridFunction& a, const GridFunction& b);

}  // namespace ksflow
