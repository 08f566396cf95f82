#include "ksflow/vector_fields.hpp"

#include <cmath>

namespace ksflow {

namespace {

// Multiply every left and right orbital by a pointwise factor; conjugation by
// the unitary e^{i theta(x)} when factor = e^{i theta}.
template <class Factor>
FiniteRankOperator phase_conjugate(const FiniteRankOperator& a, Factor&& factor) {
  const Grid& g = a.grid();
  std::vector<FiniteRankOperator::Term> terms;
  terms.reserve(a.terms().size());
  for (const auto& t : a.terms()) {
    GridFunction l = t.left, r = t.right;
    for (std::size_t k = 0; k < l.v.size(); ++k) {
      cplx f = factor(k);
      l.v[k] *= f;
      r.v[k] *= f;
    }
    terms.push_back({t.c, std::move(l), std::move(r)});
  }
  return FiniteRankOperator(g, std::move(terms), a.self_adjoint(), a.nonneg());
}

}  // namespace

GridFunction x_apply(const GridFunction& phi, int axis) {
  GridFunction out = phi;
  const Grid& g = *phi.grid;
  for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] *= g.coord(k, axis);
  return out;
}

GridFunction j_apply(const GridFunction& phi, double t, int axis) {
  GridFunction out = x_apply(phi, axis);
  if (t != 0.0) {
    GridFunction d = derivative(phi, axis);
    const cplx w{0.0, 2.0 * t};
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += w * d.v[k];
  }
  return out;
}

FiniteRankOperator J_commutator(const FiniteRankOperator& kappa, double t, int axis) {
  // [j, k] = sum c (|j l><r| - |l><j r|); j is self-adjoint.
  std::vector<FiniteRankOperator::Term> terms;
  terms.reserve(2 * kappa.terms().size());
  for (const auto& tm : kappa.terms()) {
    terms.push_back({tm.c, j_apply(tm.left, t, axis), tm.right});
    terms.push_back({-tm.c, tm.left, j_apply(tm.right, t, axis)});
  }
  return FiniteRankOperator(kappa.grid(), std::move(terms));
}

FiniteRankOperator D_commutator(const FiniteRankOperator& kappa, int axis) {
  // [d, k] = sum c (|l'><r| + |l><r'|) since d^* = -d.
  std::vector<FiniteRankOperator::Term> terms;
  terms.reserve(2 * kappa.terms().size());
  for (const auto& tm : kappa.terms()) {
    terms.push_back({tm.c, derivative(tm.left, axis), tm.right});
    terms.push_back({tm.c, tm.left, derivative(tm.right, axis)});
  }
  return FiniteRankOperator(kappa.grid(), std::move(terms));
}

FiniteRankOperator gauge_conjugate(const FiniteRankOperator& kappa, double t) {
  if (t == 0.0) throw std::invalid_argument("gauge_conjugate: t must be nonzero");
  const Grid& g = kappa.grid();
  return phase_conjugate(kappa, [&g, t](std::size_t k) {
    double x2 = 0.0;
    for (int ax = 0; ax < g.d; ++ax) {
      double x = g.coord(k, ax);
      x2 += x * x;
    }
    return std::exp(cplx{0.0, -x2 / (4.0 * t)});
  });
}

FiniteRankOperator boost(const FiniteRankOperator& kappa, const std::vector<double>& v, double t) {
  const Grid& g = kappa.grid();
  if (v.size() != static_cast<std::size_t>(g.d)) throw std::invalid_argument("boost: bad velocity");
  double v2 = 0.0;
  for (double vi : v) v2 += vi * vi;
  // U_{v,t} = e^{i(v.x - |v|^2 t)} e^{-2 v.grad t}: shift by 2vt, then phase.
  // The global phase e^{-i|v|^2 t} cancels under conjugation.
  std::vector<double> shift(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) shift[i] = 2.0 * v[i] * t;
  FiniteRankOperator shifted =
      conjugate_orbitals(kappa, [&shift](const GridFunction& f) { return translate(f, shift); });
  return phase_conjugate(shifted, [&g, &v](std::size_t k) {
    double vx = 0.0;
    for (int ax = 0; ax < g.d; ++ax) vx += v[static_cast<std::size_t>(ax)] * g.coord(k, ax);
    return std::exp(cplx{0.0, vx});
  });
}

FiniteRankOperator J_power(const FiniteRankOperator& kappa, double t, const std::vector<int>& alpha) {
  FiniteRankOperator out = kappa;
  for (int ax = 0; ax < static_cast<int>(alpha.size()); ++ax) {
    for (int p = 0; p < alpha[static_cast<std::size_t>(ax)]; ++p)
      out = compress(J_commutator(out, t, ax), 1e-12);
  }
  return out;
}

FiniteRankOperator D_power(const FiniteRankOperator& kappa, const std::vector<int>& alpha) {
  FiniteRankOperator out = kappa;
  for (int ax = 0; ax < static_cast<int>(alpha.size()); ++ax) {
    for (int p = 0; p < alpha[static_cast<std::size_t>(ax)]; ++p)
      out = compress(D_commutator(out, ax), 1e-12);
  }
  return out;
}

std::vector<std::vector<int>> multi_indices_up_to(int d, int s) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(d), 0);
  // Lexicographic enumeration of per-axis powers with total order <= s.
  while (true) {
    int total = 0;
    for (int v : cur) total += v;
    if (total <= s) out.push_back(cur);
    int ax = d - 1;
    while (ax >= 0) {
      if (++cur[static_cast<std::size_t>(ax)] <= s) break;
      cur[static_cast<std::size_t>(ax)] = 0;
      --ax;
    }
    if (ax < 0) break;
  }
  return out;
}

double weighted_norm_W(const FiniteRankOperator& kappa, int s, double t) {
  if (s < 0 || s > 2) throw std::invalid_argument("weighted_norm_W: s in {0,1,2}");
  double acc = 0.0;
  for (const auto& alpha : multi_indices_up_to(kappa.grid().d, s))
    acc += hs_norm(J_power(kappa, t, alpha));
  return acc;
}

double weighted_norm_V(const FiniteRankOperator& kappa, int s) {
  if (s < 0 || s > 2) throw std::invalid_argument("weighted_norm_V: s in {0,1,2}");
  double acc = 0.0;
  for (const auto& alpha : multi_indices_up_to(kappa.grid().d, s))
    acc += hs_norm(D_power(kappa, alpha));
  return acc;
}

double weight_x_norm(const FiniteRankOperator& kappa, int b) {
  if (b < 1 || b > 2) throw std::invalid_argument("weight_x_norm: b in {1,2}");
  const Grid& g = kappa.grid();
  std::vector<FiniteRankOperator::Term> terms;
  for (const auto& tm : kappa.terms()) {
    GridFunction l = tm.left;
    for (std::size_t k = 0; k < l.v.size(); ++k) {
      double x2 = 0.0;
      for (int ax = 0; ax < g.d; ++ax) {
        double x = g.coord(k, ax);
        x2 += x * x;
      }
      l.v[k] *= std::pow(1.0 + x2, 0.5 * b);
    }
    terms.push_back({tm.c, std::move(l), tm.right});
  }
  return hs_norm(FiniteRankOperator(g, std::move(terms)));
}

double weight_grad_norm(const FiniteRankOperator& kappa, int b) {
  if (b < 1 || b > 2) throw std::invalid_argument("weight_grad_norm: b in {1,2}");
  std::vector<FiniteRankOperator::Term> terms;
  for (const auto& tm : kappa.terms())
    terms.push_back({tm.c, bessel_weight(tm.left, b), tm.right});
  return hs_norm(FiniteRankOperator(kappa.grid(), std::move(terms)));
}

}  // namespace ksflow
