#pragma once

#include <optional>

#include "ksflow/grid.hpp"

namespace ksflow {

enum class Exec { serial, parallel };

// Finite-rank integral operator K(x,y) = sum_i c_i left_i(x) conj(right_i(y)).
// Operators are immutable values; every operation returns a new one. All
// trace-ideal quantities are computed through R x R Gram matrices.
class FiniteRankOperator {
 public:
  struct Term {
    cplx c;
    GridFunction left;
    GridFunction right;
  };

  FiniteRankOperator() = default;
  FiniteRankOperator(const Grid& g, std::vector<Term> terms, bool self_adjoint = false,
                     bool nonneg = false);

  static FiniteRankOperator zero(const Grid& g);
  // Projection-style term |phi><psi| with flags set for phi == psi, c real.
  static FiniteRankOperator rank_one(const Grid& g, cplx c, GridFunction phi, GridFunction psi);

  const Grid& grid() const { return *grid_; }
  const std::vector<Term>& terms() const { return terms_; }
  int rank() const { return static_cast<int>(terms_.size()); }
  bool self_adjoint() const { return self_adjoint_; }
  bool nonneg() const { return nonneg_; }

  cplx kernel_eval(std::size_t ix, std::size_t iy) const;  // K(x_ix, y_iy)

 private:
  const Grid* grid_ = nullptr;
  std::vector<Term> terms_;
  bool self_adjoint_ = false;
  bool nonneg_ = false;
};

FiniteRankOperator adjoint(const FiniteRankOperator& a);
FiniteRankOperator compose(const FiniteRankOperator& a, const FiniteRankOperator& b);
FiniteRankOperator add(const FiniteRankOperator& a, const FiniteRankOperator& b);
FiniteRankOperator scale(const FiniteRankOperator& a, cplx factor);

// Apply a map to every left and right orbital (conjugation by a unitary when
// the map is one, e.g. a free step or a phase multiply).
template <class Fn>
FiniteRankOperator conjugate_orbitals(const FiniteRankOperator& a, Fn&& fn) {
  std::vector<FiniteRankOperator::Term> terms;
  terms.reserve(a.terms().size());
  for (const auto& t : a.terms()) terms.push_back({t.c, fn(t.left), fn(t.right)});
  return FiniteRankOperator(a.grid(), std::move(terms), a.self_adjoint(), a.nonneg());
}

GridFunction den(const FiniteRankOperator& a);  // rho(x) = K(x,x)

cplx hs_inner(const FiniteRankOperator& a, const FiniteRankOperator& b);  // Tr(a* b)
double hs_norm(const FiniteRankOperator& a);

std::vector<double> singular_values(const FiniteRankOperator& a);
double schatten_norm(const FiniteRankOperator& a, double r);  // r = inf -> operator norm

// gamma = k* k without forming the composition: eigenvalues of gamma are the
// squared singular values of k; density via Gram coefficients.
GridFunction den_of_square(const FiniteRankOperator& k);  // den(k* k)
double trace_of_square(const FiniteRankOperator& k);      // Tr(k* k) = hs_norm^2

// kappa~(r,c) = K(c - r/2, c + r/2), materialized (d = 1 only; tests/oracles).
struct RCKernel {
  const Grid* grid = nullptr;
  std::vector<cplx> values;  // row-major [r][c]
};
RCKernel to_rc(const FiniteRankOperator& a);

// One r-row of the (r,c) kernel: c_k = x_k + offset/2 runs over a shifted
// grid with the same quadrature weight; offset is in grid steps per axis.
void rc_row(const FiniteRankOperator& a, const int* offset_steps, std::vector<cplx>& row);

// || ||k~(r,.)||_{L^p_c} ||_{L^q_r}, streamed over r rows.
double local_norm_rc(const FiniteRankOperator& a, double q, double p,
                     Exec exec = Exec::parallel);

// || ||K(x,.)||_{L^2_y} ||_{L^s_x} via Gram matrices.
double mixed_norm_xy(const FiniteRankOperator& a, double s);

// (integral |gamma(x,y)|^s dx dy)^{1/s} for gamma = a (applied to a density
// operator directly), streamed over y.
double gamma_local_norm(const FiniteRankOperator& a, double s, Exec exec = Exec::parallel);

// Rank truncation: ||a - a'||_HS <= tol * ||a||_HS, via orthonormalization of
// both orbital families and an R x R singular value decomposition.
FiniteRankOperator compress(const FiniteRankOperator& a, double tol,
                            std::optional<int> max_rank = std::nullopt);

}  // namespace ksflow
