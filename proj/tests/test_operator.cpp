#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ksflow/analysis.hpp"
#include "ksflow/grid.hpp"
#include "ksflow/operator.hpp"

using namespace ksflow;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GridFunction gaussian(const Grid& g, double width = 1.0) {
  GridFunction f(g);
  for (std::size_t k = 0; k < f.v.size(); ++k) {
    double q2 = 0.0;
    for (int a = 0; a < g.d; ++a) q2 += g.coord(k, a) * g.coord(k, a);
    f.v[k] = std::exp(-q2 / (2.0 * width * width));
  }
  double n = l2_norm(f);
  for (auto& z : f.v) z /= n;
  return f;
}

// Dense sampled kernel; test oracle only (d = 1, small n).
std::vector<cplx> dense_kernel(const FiniteRankOperator& a) {
  const std::size_t n = a.grid().size();
  std::vector<cplx> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = a.kernel_eval(i, j);
  return m;
}

}  // namespace

TEST_CASE("projection idempotence and adjoint involution") {
  Grid g = Grid::make(1, 64, 8.0);
  GridFunction phi = gaussian(g);
  FiniteRankOperator p = FiniteRankOperator::rank_one(g, 1.0, phi, phi);
  FiniteRankOperator pp = compose(p, p);
  double diff = 0.0;
  for (std::size_t i = 0; i < g.size(); i += 7)
    for (std::size_t j = 0; j < g.size(); j += 5)
      diff = std::max(diff, std::abs(pp.kernel_eval(i, j) - p.kernel_eval(i, j)));
  CHECK(diff < 1e-12);

  FiniteRankOperator a = materialize_random_op(g, draw_random_op(2, 1));
  FiniteRankOperator aa = adjoint(adjoint(a));
  CHECK(hs_norm(add(aa, scale(a, -1.0))) < 1e-12 * hs_norm(a));
}

TEST_CASE("compose against dense-kernel multiplication") {
  Grid g = Grid::make(1, 64, 8.0);
  FiniteRankOperator a = materialize_random_op(g, draw_random_op(10, 1, 2));
  FiniteRankOperator b = materialize_random_op(g, draw_random_op(11, 1, 2));
  FiniteRankOperator c = compose(a, b);
  std::vector<cplx> da = dense_kernel(a), db = dense_kernel(b);
  const std::size_t n = g.size();
  double err2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cplx acc{0.0, 0.0};
      for (std::size_t k = 0; k < n; ++k) acc += da[i * n + k] * db[k * n + j];
      acc *= g.cell();
      err2 += std::norm(acc - c.kernel_eval(i, j));
    }
  }
  CHECK(std::sqrt(err2) * g.cell() < 1e-8);
}

TEST_CASE("den") {
  Grid g = Grid::make(1, 64, 8.0);
  GridFunction phi = gaussian(g);
  FiniteRankOperator p = FiniteRankOperator::rank_one(g, 1.0, phi, phi);
  GridFunction rho = den(p);
  double total = 0.0;
  for (std::size_t k = 0; k < rho.v.size(); ++k) {
    CHECK(std::abs(rho.v[k] - std::norm(phi.v[k])) < 1e-14);
    total += rho.v[k].real();
  }
  CHECK(total * g.cell() == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(lp_norm(den(FiniteRankOperator::zero(g)), kInf) == 0.0);

  // Rank-3 nonneg with orthonormal-ized orbitals: trace = sum of weights.
  std::vector<FiniteRankOperator::Term> terms;
  std::vector<double> ws{0.5, 0.3, 0.2};
  for (int i = 0; i < 3; ++i) {
    GridFunction f(g);
    for (std::size_t k = 0; k < f.v.size(); ++k) {
      double x = g.coord(k, 0);
      f.v[k] = std::pow(x, i) * std::exp(-x * x / 2.0);
    }
    terms.push_back({cplx{ws[static_cast<std::size_t>(i)], 0.0}, f, f});
  }
  // Gram-Schmidt so that int rho = sum c_i exactly.
  for (int i = 0; i < 3; ++i) {
    auto& fi = terms[static_cast<std::size_t>(i)].left;
    for (int j = 0; j < i; ++j) {
      const auto& fj = terms[static_cast<std::size_t>(j)].left;
      cplx ov = inner(fj, fi);
      for (std::size_t k = 0; k < fi.v.size(); ++k) fi.v[k] -= ov * fj.v[k];
    }
    double nn = l2_norm(fi);
    for (auto& z : fi.v) z /= nn;
    terms[static_cast<std::size_t>(i)].right = fi;
  }
  FiniteRankOperator gma(g, terms, true, true);
  GridFunction rg = den(gma);
  double tr = 0.0;
  for (const auto& z : rg.v) tr += z.real();
  CHECK(tr * g.cell() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("hs inner and norm") {
  Grid g = Grid::make(1, 64, 8.0);
  GridFunction phi = gaussian(g);
  FiniteRankOperator p = FiniteRankOperator::rank_one(g, 1.0, phi, phi);
  CHECK(hs_norm(p) == doctest::Approx(1.0).epsilon(1e-12));

  GridFunction psi(g);
  for (std::size_t k = 0; k < psi.v.size(); ++k) psi.v[k] = g.coord(k, 0) * phi.v[k];
  cplx ov = inner(phi, psi);
  for (std::size_t k = 0; k < psi.v.size(); ++k) psi.v[k] -= ov * phi.v[k];
  double nn = l2_norm(psi);
  for (auto& z : psi.v) z /= nn;
  FiniteRankOperator q = FiniteRankOperator::rank_one(g, 1.0, psi, psi);
  CHECK(std::abs(hs_inner(p, q)) < 1e-12);

  FiniteRankOperator a = materialize_random_op(g, draw_random_op(5, 1));
  std::vector<cplx> da = dense_kernel(a);
  double dense2 = 0.0;
  for (const auto& z : da) dense2 += std::norm(z);
  dense2 *= g.cell() * g.cell();
  CHECK(hs_norm(a) == doctest::Approx(std::sqrt(dense2)).epsilon(1e-8));
}

TEST_CASE("schatten norms") {
  Grid g = Grid::make(1, 64, 8.0);
  GridFunction phi = gaussian(g);
  FiniteRankOperator two = FiniteRankOperator::rank_one(g, 2.0, phi, phi);
  for (double r : {1.0, 2.0, 3.0, kInf})
    CHECK(schatten_norm(two, r) == doctest::Approx(2.0).epsilon(1e-10));

  GridFunction psi(g);
  for (std::size_t k = 0; k < psi.v.size(); ++k) psi.v[k] = g.coord(k, 0) * phi.v[k];
  cplx ov = inner(phi, psi);
  for (std::size_t k = 0; k < psi.v.size(); ++k) psi.v[k] -= ov * phi.v[k];
  double nn = l2_norm(psi);
  for (auto& z : psi.v) z /= nn;
  FiniteRankOperator ab = add(FiniteRankOperator::rank_one(g, 1.0, phi, phi),
                              FiniteRankOperator::rank_one(g, 1.0, psi, psi));
  CHECK(schatten_norm(ab, 1.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(schatten_norm(ab, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));

  FiniteRankOperator a = materialize_random_op(g, draw_random_op(6, 1, 4));
  CHECK(schatten_norm(a, 2.0) == doctest::Approx(hs_norm(a)).epsilon(1e-10));
  // Nonincreasing in r.
  double prev = schatten_norm(a, 1.0);
  for (double r : {1.5, 2.0, 3.0, 6.0, kInf}) {
    double cur = schatten_norm(a, r);
    CHECK(cur <= prev * (1.0 + 1e-12));
    prev = cur;
  }
}

TEST_CASE("rc kernel matches pointwise products") {
  Grid g = Grid::make(1, 64, 8.0);
  GridFunction phi = gaussian(g);
  FiniteRankOperator p = FiniteRankOperator::rank_one(g, 1.0, phi, phi);
  RCKernel rc = to_rc(p);
  const std::size_t n = g.size();
  // Even offsets give on-grid c - r/2 and c + r/2.
  for (std::size_t j = 0; j < n; j += 2) {
    for (std::size_t x = 0; x < n; x += 3) {
      std::size_t y = (x + j) % n;
      CHECK(std::abs(rc.values[j * n + x] - phi.v[x] * std::conj(phi.v[y])) < 1e-12);
    }
  }
}

TEST_CASE("local rc norms") {
  Grid g = Grid::make(1, 128, 16.0);
  FiniteRankOperator a = materialize_random_op(g, draw_random_op(8, 1));
  CHECK(local_norm_rc(a, 2.0, 2.0) == doctest::Approx(hs_norm(a)).epsilon(1e-10));
  CHECK(local_norm_rc(a, 2.0, 4.0, Exec::serial) ==
        doctest::Approx(local_norm_rc(a, 2.0, 4.0, Exec::parallel)).epsilon(1e-13));
}

TEST_CASE("free-evolved Gaussian L2_r Linf_c against the closed form") {
  Grid g = Grid::make(1, 512, 64.0);
  GridFunction phi(g);
  for (std::size_t k = 0; k < phi.v.size(); ++k) {
    double x = g.coord(k, 0);
    phi.v[k] = std::pow(M_PI, -0.25) * std::exp(-x * x / 2.0);
  }
  const double t = 4.0;
  GridFunction phit = apply_free_propagator(phi, t);
  FiniteRankOperator kt = FiniteRankOperator::rank_one(g, 1.0, phit, phit);
  // |phi_t(x)| = (pi s2)^{-1/4} e^{-x^2/(2 s2)}, s2 = 1 + 4t^2. Quadrature of
  // the analytic modulus on the exact same (r,c) sample points: row offset j
  // pairs x_k with x_{k+j mod n}.
  const double s2 = 1.0 + 4.0 * t * t;
  auto amp = [&](std::size_t k) {
    double x = g.coord(k, 0);
    return std::pow(M_PI * s2, -0.25) * std::exp(-x * x / (2.0 * s2));
  };
  const std::size_t n = g.size();
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double sup = 0.0;
    for (std::size_t k = 0; k < n; ++k) sup = std::max(sup, amp(k) * amp((k + j) % n));
    acc += sup * sup;
  }
  const double want = std::sqrt(acc * g.cell());
  CHECK(local_norm_rc(kt, 2.0, kInf) == doctest::Approx(want).epsilon(1e-6));
  // Continuum closed form (2/pi)^{1/4} s2^{-1/4} as a sanity envelope.
  CHECK(want == doctest::Approx(std::pow(2.0 / M_PI, 0.25) * std::pow(s2, -0.25)).epsilon(1e-3));
}

TEST_CASE("mixed xy and gamma local norms") {
  Grid g = Grid::make(1, 128, 16.0);
  FiniteRankOperator a = materialize_random_op(g, draw_random_op(9, 1));
  CHECK(mixed_norm_xy(a, 2.0) == doctest::Approx(hs_norm(a)).epsilon(1e-10));

  FiniteRankOperator gamma = compose(adjoint(a), a);
  CHECK(gamma_local_norm(gamma, 2.0) == doctest::Approx(hs_norm(gamma)).epsilon(1e-10));
  CHECK(gamma_local_norm(gamma, 4.0, Exec::serial) ==
        doctest::Approx(gamma_local_norm(gamma, 4.0, Exec::parallel)).epsilon(1e-13));

  GridFunction phi = gaussian(g);  // width 1, normalized
  FiniteRankOperator p = FiniteRankOperator::rank_one(g, 1.0, phi, phi);
  CHECK(gamma_local_norm(p, kInf) == doctest::Approx(std::pow(M_PI, -0.5)).epsilon(1e-6));
}

TEST_CASE("xy-rc inequality and gamma domination on the random family") {
  Grid g = Grid::make(1, 128, 16.0);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    FiniteRankOperator a = materialize_random_op(g, draw_random_op(seed, 1));
    for (double s : {2.0, 3.0, 4.0, 6.0, kInf}) {
      CHECK(mixed_norm_xy(a, s) <= local_norm_rc(a, 2.0, s) * (1.0 + 1e-10));
      double mx = mixed_norm_xy(adjoint(a), s);
      CHECK(gamma_local_norm(compose(adjoint(a), a), s) <= mx * mx * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("nonneg operators have nonneg densities and Gram spectra") {
  Grid g = Grid::make(1, 64, 8.0);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  std::vector<FiniteRankOperator::Term> terms;
  for (int i = 0; i < 3; ++i) {
    GridFunction f(g);
    for (auto& z : f.v) z = cplx{nd(rng), nd(rng)};
    terms.push_back({cplx{0.5 + i * 0.25, 0.0}, f, f});
  }
  FiniteRankOperator gma(g, std::move(terms), true, true);
  GridFunction rho = den(gma);
  for (const auto& z : rho.v) CHECK(z.real() >= -1e-12);
  for (double sv : singular_values(gma)) CHECK(sv >= -1e-12);
}

TEST_CASE("compress") {
  Grid g = Grid::make(1, 128, 16.0);
  FiniteRankOperator a = materialize_random_op(g, draw_random_op(14, 1, 4));

  SUBCASE("tol = 0 re-orthonormalizes without loss") {
    FiniteRankOperator c = compress(a, 0.0);
    CHECK(hs_norm(add(c, scale(a, -1.0))) < 1e-12 * hs_norm(a));
  }
  SUBCASE("exact degeneracy drops rank") {
    GridFunction phi = gaussian(g), psi = gaussian(g, 1.5);
    FiniteRankOperator dup = add(FiniteRankOperator::rank_one(g, 1.0, phi, psi),
                                 FiniteRankOperator::rank_one(g, -0.5, phi, psi));
    FiniteRankOperator c = compress(dup, 1e-14);
    CHECK(c.rank() == 1);
    CHECK(hs_norm(add(c, scale(dup, -1.0))) < 1e-12 * hs_norm(dup));
  }
  SUBCASE("self-certifying tolerance on a rank-8 operator") {
    FiniteRankOperator b = add(a, materialize_random_op(g, draw_random_op(15, 1, 4)));
    FiniteRankOperator c = compress(b, 1e-3);
    CHECK(hs_norm(add(c, scale(b, -1.0))) <= 1e-3 * hs_norm(b) * (1.0 + 1e-10));
  }
  SUBCASE("flags survive and self-adjoint output stays projector-form") {
    GridFunction phi = gaussian(g), psi = gaussian(g, 1.3);
    FiniteRankOperator sa = add(FiniteRankOperator::rank_one(g, 0.7, phi, phi),
                                FiniteRankOperator::rank_one(g, 0.3, psi, psi));
    FiniteRankOperator c = compress(sa, 1e-12);
    CHECK(c.self_adjoint());
    CHECK(c.nonneg());
    for (const auto& t : c.terms()) CHECK(t.left.v == t.right.v);
    // Gram-based difference norms bottom out near 1e-8 (cancellation of O(1)
    // summands inside the squared norm).
    CHECK(hs_norm(add(c, scale(sa, -1.0))) < 1e-7 * hs_norm(sa));
  }
}
