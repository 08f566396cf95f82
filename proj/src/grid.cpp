#include "ksflow/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace ksflow {

namespace {

constexpr double kPi = std::numbers::pi;

// One cached FFTW plan pair per (d, n). Plans are created with FFTW_UNALIGNED
// so they can be executed on any caller buffer; fftw_execute_dft on distinct
// buffers is thread-safe, plan creation is not.
struct PlanPair {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

PlanPair& plans_for(int d, int n) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(d, n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::vector<int> dims(static_cast<std::size_t>(d), n);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  std::vector<cplx> a(total), b(total);
  PlanPair pp;
  pp.fwd = fftw_plan_dft(d, dims.data(), reinterpret_cast<fftw_complex*>(a.data()),
                         reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD,
                         FFTW_ESTIMATE | FFTW_UNALIGNED);
  pp.bwd = fftw_plan_dft(d, dims.data(), reinterpret_cast<fftw_complex*>(a.data()),
                         reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD,
                         FFTW_ESTIMATE | FFTW_UNALIGNED);
  return cache.emplace(key, pp).first->second;
}

void run_dft(const Grid& g, const std::vector<cplx>& in, std::vector<cplx>& out, bool forward) {
  PlanPair& pp = plans_for(g.d, g.n);
  out.resize(in.size());
  fftw_execute_dft(forward ? pp.fwd : pp.bwd,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void check_shape(const GridFunction& f) {
  if (!f.grid || f.v.size() != f.grid->size())
    throw std::invalid_argument("grid function shape mismatch");
}

// Decompose a flat row-major index into per-axis indices.
inline void unflatten(const Grid& g, std::size_t flat, int* idx) {
  for (int ax = g.d - 1; ax >= 0; --ax) {
    idx[ax] = static_cast<int>(flat % static_cast<std::size_t>(g.n));
    flat /= static_cast<std::size_t>(g.n);
  }
}

}  // namespace

Grid Grid::make(int d, int n, double half_length) {
  if (d < 1 || d > 3) throw std::invalid_argument("Grid: d must be 1, 2 or 3");
  if (n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("Grid: n must be a power of two >= 8");
  if (half_length <= 0.0) throw std::invalid_argument("Grid: L must be positive");
  Grid g;
  g.d = d;
  g.n = n;
  g.half_length = half_length;
  g.h = 2.0 * half_length / n;
  g.xs.resize(static_cast<std::size_t>(n));
  g.xis.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    g.xs[static_cast<std::size_t>(k)] = -half_length + k * g.h;
    int m = (k < n / 2) ? k : k - n;
    g.xis[static_cast<std::size_t>(k)] = (kPi / half_length) * m;
  }
  return g;
}

std::size_t Grid::size() const {
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  return total;
}

double Grid::cell() const {
  double w = 1.0;
  for (int i = 0; i < d; ++i) w *= h;
  return w;
}

double Grid::coord(std::size_t flat, int axis) const {
  for (int ax = d - 1; ax > axis; --ax) flat /= static_cast<std::size_t>(n);
  return xs[flat % static_cast<std::size_t>(n)];
}

GridFunction forward_transform(const GridFunction& f) {
  check_shape(f);
  const Grid& g = *f.grid;
  GridFunction out(g);
  run_dft(g, f.v, out.v, true);
  // Continuum sampling: c(xi_m) = (2 pi)^{-d/2} h^d sum_k f_k e^{-i xi_m x_k}.
  // The DFT carries e^{-2 pi i mk/n}; the offset x = -L + kh adds (-1)^m per axis.
  const double scale = std::pow(2.0 * kPi, -0.5 * g.d) * g.cell();
  std::vector<int> idx(static_cast<std::size_t>(g.d));
  for (std::size_t j = 0; j < out.v.size(); ++j) {
    unflatten(g, j, idx.data());
    int msum = 0;
    for (int ax = 0; ax < g.d; ++ax) {
      int k = idx[static_cast<std::size_t>(ax)];
      msum += (k < g.n / 2) ? k : k - g.n;
    }
    double sign = (msum % 2 == 0) ? 1.0 : -1.0;
    out.v[j] *= scale * sign;
  }
  return out;
}

GridFunction inverse_transform(const GridFunction& c) {
  check_shape(c);
  const Grid& g = *c.grid;
  GridFunction tmp(g);
  std::vector<int> idx(static_cast<std::size_t>(g.d));
  const double scale = std::pow(2.0 * kPi, 0.5 * g.d) / (g.cell() * static_cast<double>(g.size()));
  for (std::size_t j = 0; j < c.v.size(); ++j) {
    unflatten(g, j, idx.data());
    int msum = 0;
    for (int ax = 0; ax < g.d; ++ax) {
      int k = idx[static_cast<std::size_t>(ax)];
      msum += (k < g.n / 2) ? k : k - g.n;
    }
    double sign = (msum % 2 == 0) ? 1.0 : -1.0;
    tmp.v[j] = c.v[j] * (scale * sign);
  }
  GridFunction out(g);
  run_dft(g, tmp.v, out.v, false);
  return out;
}

namespace {

// Apply a diagonal Fourier multiplier M(xi); normalization-free.
template <class Symbol>
GridFunction apply_multiplier(const GridFunction& f, Symbol&& symbol) {
  check_shape(f);
  const Grid& g = *f.grid;
  GridFunction hat(g);
  run_dft(g, f.v, hat.v, true);
  const double norm = 1.0 / static_cast<double>(g.size());
  std::vector<int> idx(static_cast<std::size_t>(g.d));
  std::vector<double> xi(static_cast<std::size_t>(g.d));
  for (std::size_t j = 0; j < hat.v.size(); ++j) {
    unflatten(g, j, idx.data());
    for (int ax = 0; ax < g.d; ++ax)
      xi[static_cast<std::size_t>(ax)] = g.xis[static_cast<std::size_t>(idx[static_cast<std::size_t>(ax)])];
    hat.v[j] *= symbol(xi) * norm;
  }
  GridFunction out(g);
  run_dft(g, hat.v, out.v, false);
  return out;
}

}  // namespace

GridFunction apply_free_propagator(const GridFunction& f, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("free propagator: t must be finite");
  return apply_multiplier(f, [t](const std::vector<double>& xi) {
    double k2 = 0.0;
    for (double x : xi) k2 += x * x;
    return std::exp(cplx{0.0, -t * k2});
  });
}

GridFunction derivative(const GridFunction& f, int axis) {
  if (axis < 0 || axis >= f.grid->d) throw std::invalid_argument("derivative: bad axis");
  return apply_multiplier(f, [axis](const std::vector<double>& xi) {
    return cplx{0.0, xi[static_cast<std::size_t>(axis)]};
  });
}

GridFunction bessel_weight(const GridFunction& f, int b) {
  return apply_multiplier(f, [b](const std::vector<double>& xi) {
    double k2 = 0.0;
    for (double x : xi) k2 += x * x;
    return cplx{std::pow(1.0 + k2, 0.5 * b), 0.0};
  });
}

GridFunction translate(const GridFunction& f, const std::vector<double>& shift) {
  if (shift.size() != static_cast<std::size_t>(f.grid->d))
    throw std::invalid_argument("translate: shift dimension mismatch");
  return apply_multiplier(f, [&shift](const std::vector<double>& xi) {
    double phase = 0.0;
    for (std::size_t ax = 0; ax < xi.size(); ++ax) phase -= xi[ax] * shift[ax];
    return std::exp(cplx{0.0, phase});
  });
}

double riesz_symbol_constant(int d, double a) {
  // Plain-convention Fourier transform of |x|^{-a} on R^d.
  return std::pow(2.0, d - a) * std::pow(kPi, 0.5 * d) * std::tgamma(0.5 * (d - a)) /
         std::tgamma(0.5 * a);
}

GridFunction convolve_potential(const GridFunction& rho, const PotentialSpec& spec) {
  check_shape(rho);
  switch (spec.kind) {
    case PotentialKind::none: {
      GridFunction zero(*rho.grid);
      return zero;
    }
    case PotentialKind::delta:
      return rho;
    case PotentialKind::riesz: {
      const Grid& g = *rho.grid;
      const double a = spec.riesz_a;
      if (!(a > 1.0 && a < g.d))
        throw std::invalid_argument("riesz potential: exponent must satisfy 1 < a < d");
      const double c = riesz_symbol_constant(g.d, a);
      const double zero_mode = c * std::pow(kPi / g.half_length, a - g.d);
      return apply_multiplier(rho, [a, c, zero_mode, &g](const std::vector<double>& xi) {
        double k2 = 0.0;
        for (double x : xi) k2 += x * x;
        if (k2 == 0.0) return cplx{zero_mode, 0.0};
        return cplx{c * std::pow(std::sqrt(k2), a - g.d), 0.0};
      });
    }
  }
  throw std::logic_error("unreachable");
}

double lp_norm(const GridFunction& f, double p) {
  check_shape(f);
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const cplx& z : f.v) m = std::max(m, std::abs(z));
    return m;
  }
  double acc = 0.0;
  for (const cplx& z : f.v) acc += std::pow(std::abs(z), p);
  return std::pow(f.grid->cell() * acc, 1.0 / p);
}

cplx inner(const GridFunction& a, const GridFunction& b) {
  check_shape(a);
  check_shape(b);
  if (!(*a.grid == *b.grid)) throw std::invalid_argument("inner: grid mismatch");
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < a.v.size(); ++j) acc += std::conj(a.v[j]) * b.v[j];
  return acc * a.grid->cell();
}

double l2_norm(const GridFunction& f) { return std::sqrt(std::abs(inner(f, f))); }

double boundary_mass_fraction(const GridFunction& rho) {
  check_shape(rho);
  const Grid& g = *rho.grid;
  const double cut = 0.75 * g.half_length;
  double total = 0.0, outer = 0.0;
  for (std::size_t j = 0; j < rho.v.size(); ++j) {
    double m = std::abs(rho.v[j]);
    total += m;
    bool near = false;
    for (int ax = 0; ax < g.d; ++ax)
      if (std::abs(g.coord(j, ax)) >= cut) near = true;
    if (near) outer += m;
  }
  return total > 0.0 ? outer / total : 0.0;
}

GridFunction multiply_pointwise(const GridFunction& a, const GridFunction& b) {
  check_shape(a);
  check_shape(b);
  if (!(*a.grid == *b.grid)) throw std::invalid_argument("multiply: grid mismatch");
  GridFunction out(*a.grid);
  for (std::size_t j = 0; j < a.v.size(); ++j) out.v[j] = a.v[j] * b.v[j];
  return out;
}

}  // namespace ksflow
