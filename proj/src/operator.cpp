#include "ksflow/operator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ksflow {

namespace {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

Mat gram(const std::vector<FiniteRankOperator::Term>& terms, bool left, double cell) {
  const int r = static_cast<int>(terms.size());
  Mat g(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) {
      const auto& fi = left ? terms[static_cast<std::size_t>(i)].left : terms[static_cast<std::size_t>(i)].right;
      const auto& fj = left ? terms[static_cast<std::size_t>(j)].left : terms[static_cast<std::size_t>(j)].right;
      cplx acc{0.0, 0.0};
      for (std::size_t k = 0; k < fi.v.size(); ++k) acc += std::conj(fi.v[k]) * fj.v[k];
      g(i, j) = acc * cell;
      g(j, i) = std::conj(g(i, j));
    }
  }
  return g;
}

// Factor T with family = orthonormal * T; columns of basis give the
// orthonormal family as combinations of the original orbitals.
struct OrthFactor {
  Mat basis;  // R x r: orth_k = sum_i basis(i,k) orbital_i
  Mat t;      // r x R: orbital_i = sum_k t(k,i) orth_k
  int rank = 0;
};

OrthFactor orth_factor(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  const auto& lam = es.eigenvalues();
  double lmax = std::max(lam.maxCoeff(), 0.0);
  double cut = lmax * 1e-28;
  std::vector<int> keep;
  for (int i = 0; i < lam.size(); ++i)
    if (lam(i) > cut && lam(i) > 0.0) keep.push_back(i);
  OrthFactor f;
  f.rank = static_cast<int>(keep.size());
  f.basis.resize(g.rows(), f.rank);
  f.t.resize(f.rank, g.rows());
  for (int k = 0; k < f.rank; ++k) {
    double s = std::sqrt(lam(keep[static_cast<std::size_t>(k)]));
    f.basis.col(k) = es.eigenvectors().col(keep[static_cast<std::size_t>(k)]) / s;
    f.t.row(k) = s * es.eigenvectors().col(keep[static_cast<std::size_t>(k)]).adjoint();
  }
  return f;
}

void check_same_grid(const FiniteRankOperator& a, const FiniteRankOperator& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("operator grid mismatch");
}

GridFunction combine(const Grid& g, const std::vector<FiniteRankOperator::Term>& terms,
                     bool left, const Vec& coeffs) {
  GridFunction out(g);
  for (int i = 0; i < coeffs.size(); ++i) {
    const cplx c = coeffs(i);
    if (c == cplx{0.0, 0.0}) continue;
    const auto& f = left ? terms[static_cast<std::size_t>(i)].left : terms[static_cast<std::size_t>(i)].right;
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += c * f.v[k];
  }
  return out;
}

double lp_reduce(std::vector<double>& vals, double p, double weight) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : vals) m = std::max(m, v);
    return m;
  }
  double acc = 0.0;
  for (double v : vals) acc += std::pow(v, p);
  return std::pow(weight * acc, 1.0 / p);
}

}  // namespace

FiniteRankOperator::FiniteRankOperator(const Grid& g, std::vector<Term> terms, bool self_adjoint,
                                       bool nonneg)
    : grid_(&g), terms_(std::move(terms)), self_adjoint_(self_adjoint), nonneg_(nonneg) {
  for (const auto& t : terms_) {
    if (!t.left.grid || !(*t.left.grid == g) || !t.right.grid || !(*t.right.grid == g))
      throw std::invalid_argument("operator term on wrong grid");
  }
}

FiniteRankOperator FiniteRankOperator::zero(const Grid& g) {
  return FiniteRankOperator(g, {}, true, true);
}

FiniteRankOperator FiniteRankOperator::rank_one(const Grid& g, cplx c, GridFunction phi,
                                                GridFunction psi) {
  bool same = phi.v == psi.v;
  bool sa = same && c.imag() == 0.0;
  bool nn = sa && c.real() >= 0.0;
  std::vector<Term> terms;
  terms.push_back({c, std::move(phi), std::move(psi)});
  return FiniteRankOperator(g, std::move(terms), sa, nn);
}

cplx FiniteRankOperator::kernel_eval(std::size_t ix, std::size_t iy) const {
  cplx acc{0.0, 0.0};
  for (const auto& t : terms_) acc += t.c * t.left.v[ix] * std::conj(t.right.v[iy]);
  return acc;
}

FiniteRankOperator adjoint(const FiniteRankOperator& a) {
  std::vector<FiniteRankOperator::Term> terms;
  terms.reserve(a.terms().size());
  for (const auto& t : a.terms()) terms.push_back({std::conj(t.c), t.right, t.left});
  return FiniteRankOperator(a.grid(), std::move(terms), a.self_adjoint(), a.nonneg());
}

FiniteRankOperator compose(const FiniteRankOperator& a, const FiniteRankOperator& b) {
  check_same_grid(a, b);
  const double cell = a.grid().cell();
  std::vector<FiniteRankOperator::Term> terms;
  terms.reserve(a.terms().size() * b.terms().size());
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      cplx ov{0.0, 0.0};
      for (std::size_t k = 0; k < ta.right.v.size(); ++k)
        ov += std::conj(ta.right.v[k]) * tb.left.v[k];
      ov *= cell;
      cplx c = ta.c * tb.c * ov;
      if (c == cplx{0.0, 0.0}) continue;
      terms.push_back({c, ta.left, tb.right});
    }
  }
  return FiniteRankOperator(a.grid(), std::move(terms));
}

FiniteRankOperator add(const FiniteRankOperator& a, const FiniteRankOperator& b) {
  check_same_grid(a, b);
  std::vector<FiniteRankOperator::Term> terms = a.terms();
  terms.insert(terms.end(), b.terms().begin(), b.terms().end());
  bool sa = a.self_adjoint() && b.self_adjoint();
  bool nn = a.nonneg() && b.nonneg();
  return FiniteRankOperator(a.grid(), std::move(terms), sa, nn);
}

FiniteRankOperator scale(const FiniteRankOperator& a, cplx factor) {
  std::vector<FiniteRankOperator::Term> terms = a.terms();
  for (auto& t : terms) t.c *= factor;
  bool sa = a.self_adjoint() && factor.imag() == 0.0;
  bool nn = a.nonneg() && sa && factor.real() >= 0.0;
  return FiniteRankOperator(a.grid(), std::move(terms), sa, nn);
}

GridFunction den(const FiniteRankOperator& a) {
  GridFunction rho(a.grid());
  for (const auto& t : a.terms())
    for (std::size_t k = 0; k < rho.v.size(); ++k)
      rho.v[k] += t.c * t.left.v[k] * std::conj(t.right.v[k]);
  return rho;
}

cplx hs_inner(const FiniteRankOperator& a, const FiniteRankOperator& b) {
  check_same_grid(a, b);
  // Tr(a* b) = sum_ij conj(c^a_i) c^b_j <l^a_i, l^b_j> <r^b_j, r^a_i>
  const double cell = a.grid().cell();
  cplx acc{0.0, 0.0};
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      cplx ll{0.0, 0.0}, rr{0.0, 0.0};
      for (std::size_t k = 0; k < ta.left.v.size(); ++k) {
        ll += std::conj(ta.left.v[k]) * tb.left.v[k];
        rr += std::conj(tb.right.v[k]) * ta.right.v[k];
      }
      acc += std::conj(ta.c) * tb.c * (ll * cell) * (rr * cell);
    }
  }
  return acc;
}

double hs_norm(const FiniteRankOperator& a) {
  double v = hs_inner(a, a).real();
  return std::sqrt(std::max(v, 0.0));
}

std::vector<double> singular_values(const FiniteRankOperator& a) {
  const int r = a.rank();
  if (r == 0) return {};
  const double cell = a.grid().cell();
  Mat gl = gram(a.terms(), true, cell);
  Mat gr = gram(a.terms(), false, cell);
  OrthFactor fl = orth_factor(gl);
  OrthFactor fr = orth_factor(gr);
  Vec c(r);
  for (int i = 0; i < r; ++i) c(i) = a.terms()[static_cast<std::size_t>(i)].c;
  // a = L_orth (T_L C T_R^H) R_orth^H; singular values are those of the core.
  Mat core = fl.t * c.asDiagonal() * fr.t.adjoint();
  Eigen::JacobiSVD<Mat> svd(core);
  std::vector<double> out(svd.singularValues().data(),
                          svd.singularValues().data() + svd.singularValues().size());
  return out;
}

double schatten_norm(const FiniteRankOperator& a, double r) {
  if (r < 1.0) throw std::invalid_argument("schatten_norm: r must be >= 1");
  std::vector<double> sv = singular_values(a);
  if (sv.empty()) return 0.0;
  if (std::isinf(r)) return *std::max_element(sv.begin(), sv.end());
  double acc = 0.0;
  for (double s : sv) acc += std::pow(s, r);
  return std::pow(acc, 1.0 / r);
}

GridFunction den_of_square(const FiniteRankOperator& k) {
  // den(k* k)(x) = sum_ij conj(c_i) c_j <l_i, l_j> r_i(x) conj(r_j(x))
  const int r = k.rank();
  GridFunction rho(k.grid());
  if (r == 0) return rho;
  Mat gl = gram(k.terms(), true, k.grid().cell());
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      cplx w = std::conj(k.terms()[static_cast<std::size_t>(i)].c) *
               k.terms()[static_cast<std::size_t>(j)].c * gl(i, j);
      if (w == cplx{0.0, 0.0}) continue;
      const auto& ri = k.terms()[static_cast<std::size_t>(i)].right;
      const auto& rj = k.terms()[static_cast<std::size_t>(j)].right;
      for (std::size_t p = 0; p < rho.v.size(); ++p)
        rho.v[p] += w * ri.v[p] * std::conj(rj.v[p]);
    }
  }
  return rho;
}

double trace_of_square(const FiniteRankOperator& k) {
  double v = hs_inner(k, k).real();
  return std::max(v, 0.0);
}

RCKernel to_rc(const FiniteRankOperator& a) {
  const Grid& g = a.grid();
  if (g.d != 1) throw std::invalid_argument("to_rc: materialized kernel is d = 1 only");
  RCKernel rc;
  rc.grid = &g;
  const std::size_t n = g.size();
  rc.values.assign(n * n, cplx{0.0, 0.0});
  std::vector<cplx> row(n);
  for (std::size_t j = 0; j < n; ++j) {
    int off = static_cast<int>(j);
    rc_row(a, &off, row);
    std::copy(row.begin(), row.end(), rc.values.begin() + static_cast<std::ptrdiff_t>(j * n));
  }
  return rc;
}

void rc_row(const FiniteRankOperator& a, const int* offset_steps, std::vector<cplx>& row) {
  const Grid& g = a.grid();
  const std::size_t total = g.size();
  row.assign(total, cplx{0.0, 0.0});
  const int n = g.n;
  // kappa~(r, c)|_{c = x + r/2} = K(x, x + r) with periodic wrap; the shifted
  // c grid carries the same quadrature weight.
  if (g.d == 1) {
    const int off = offset_steps[0];
    for (int x = 0; x < n; ++x) {
      int y = x + off;
      if (y >= n) y -= n;
      row[static_cast<std::size_t>(x)] =
          a.kernel_eval(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    }
  } else if (g.d == 2) {
    const int off0 = offset_steps[0], off1 = offset_steps[1];
    for (int x0 = 0; x0 < n; ++x0) {
      int y0 = x0 + off0;
      if (y0 >= n) y0 -= n;
      for (int x1 = 0; x1 < n; ++x1) {
        int y1 = x1 + off1;
        if (y1 >= n) y1 -= n;
        row[static_cast<std::size_t>(x0 * n + x1)] =
            a.kernel_eval(static_cast<std::size_t>(x0 * n + x1), static_cast<std::size_t>(y0 * n + y1));
      }
    }
  } else {
    throw std::invalid_argument("rc_row: d <= 2 only");
  }
}

double local_norm_rc(const FiniteRankOperator& a, double q, double p, Exec exec) {
  const Grid& g = a.grid();
  if (g.d > 2) throw std::invalid_argument("local_norm_rc: d <= 2 only");
  const int n = g.n;
  const std::size_t rows = g.size();
  std::vector<double> row_norms(rows, 0.0);
  const double cell = g.cell();

  // row(x) = K(x, x + off) = sum_i c_i l_i(x) conj(r_i(x + off)); accumulate
  // term by term over precomputed wrapped indices instead of evaluating the
  // kernel entry-wise (rank-major passes vectorize, kernel_eval does not).
  auto row_value = [&](std::size_t j, std::vector<cplx>& row, std::vector<std::size_t>& wrap) {
    int off[2] = {0, 0};
    if (g.d == 1) {
      off[0] = static_cast<int>(j);
    } else {
      off[0] = static_cast<int>(j) / n;
      off[1] = static_cast<int>(j) % n;
    }
    wrap.resize(rows);
    if (g.d == 1) {
      for (std::size_t x = 0; x < rows; ++x) {
        std::size_t y = x + static_cast<std::size_t>(off[0]);
        wrap[x] = y >= rows ? y - rows : y;
      }
    } else {
      const std::size_t un = static_cast<std::size_t>(n);
      for (std::size_t x = 0; x < rows; ++x) {
        std::size_t y0 = x / un + static_cast<std::size_t>(off[0]);
        std::size_t y1 = x % un + static_cast<std::size_t>(off[1]);
        if (y0 >= un) y0 -= un;
        if (y1 >= un) y1 -= un;
        wrap[x] = y0 * un + y1;
      }
    }
    row.assign(rows, cplx{0.0, 0.0});
    for (const auto& t : a.terms()) {
      const cplx* l = t.left.v.data();
      const cplx* r = t.right.v.data();
      const cplx c = t.c;
      for (std::size_t x = 0; x < rows; ++x) row[x] += c * l[x] * std::conj(r[wrap[x]]);
    }
    if (std::isinf(p)) {
      double m = 0.0;
      for (const cplx& z : row) m = std::max(m, std::norm(z));
      return std::sqrt(m);
    }
    double acc = 0.0;
    const double hp = p / 2.0;
    if (p == 4.0) {
      for (const cplx& z : row) {
        double q = std::norm(z);
        acc += q * q;
      }
    } else {
      for (const cplx& z : row) acc += std::pow(std::norm(z), hp);
    }
    return std::pow(cell * acc, 1.0 / p);
  };

  if (exec == Exec::parallel) {
#pragma omp parallel
    {
      std::vector<cplx> row;
      std::vector<std::size_t> wrap;
#pragma omp for schedule(static)
      for (long long j = 0; j < static_cast<long long>(rows); ++j)
        row_norms[static_cast<std::size_t>(j)] = row_value(static_cast<std::size_t>(j), row, wrap);
    }
  } else {
    std::vector<cplx> row;
    std::vector<std::size_t> wrap;
    for (std::size_t j = 0; j < rows; ++j) row_norms[j] = row_value(j, row, wrap);
  }
  return lp_reduce(row_norms, q, cell);
}

double mixed_norm_xy(const FiniteRankOperator& a, double s) {
  // f(x)^2 = ||K(x,.)||^2_{L^2_y} = sum_ij c_i conj(c_j) <r_i, r_j> l_i(x) conj(l_j(x))
  const int r = a.rank();
  const Grid& g = a.grid();
  if (r == 0) return 0.0;
  Mat gr = gram(a.terms(), false, g.cell());
  std::vector<double> f(g.size(), 0.0);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      cplx w = a.terms()[static_cast<std::size_t>(i)].c *
               std::conj(a.terms()[static_cast<std::size_t>(j)].c) * gr(i, j);
      const auto& li = a.terms()[static_cast<std::size_t>(i)].left;
      const auto& lj = a.terms()[static_cast<std::size_t>(j)].left;
      for (std::size_t k = 0; k < f.size(); ++k)
        f[k] += (w * li.v[k] * std::conj(lj.v[k])).real();
    }
  }
  for (double& v : f) v = std::sqrt(std::max(v, 0.0));
  return lp_reduce(f, s, g.cell());
}

double gamma_local_norm(const FiniteRankOperator& a, double s, Exec exec) {
  const Grid& g = a.grid();
  const std::size_t total = g.size();
  const int r = a.rank();
  if (r == 0) return 0.0;
  std::vector<double> col(total, 0.0);

  auto col_value = [&](std::size_t iy) {
    // |gamma(., y)| reduced in x for fixed y.
    std::vector<cplx> wy(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i)
      wy[static_cast<std::size_t>(i)] =
          a.terms()[static_cast<std::size_t>(i)].c *
          std::conj(a.terms()[static_cast<std::size_t>(i)].right.v[iy]);
    std::vector<cplx> colv(total, cplx{0.0, 0.0});
    for (int i = 0; i < r; ++i) {
      const cplx w = wy[static_cast<std::size_t>(i)];
      const cplx* l = a.terms()[static_cast<std::size_t>(i)].left.v.data();
      for (std::size_t ix = 0; ix < total; ++ix) colv[ix] += w * l[ix];
    }
    if (std::isinf(s)) {
      double m = 0.0;
      for (const cplx& z : colv) m = std::max(m, std::norm(z));
      return std::sqrt(m);
    }
    double acc = 0.0;
    if (s == 4.0) {
      for (const cplx& z : colv) {
        double q = std::norm(z);
        acc += q * q;
      }
    } else {
      for (const cplx& z : colv) acc += std::pow(std::norm(z), s / 2.0);
    }
    return std::pow(g.cell() * acc, 1.0 / s);
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long long iy = 0; iy < static_cast<long long>(total); ++iy)
      col[static_cast<std::size_t>(iy)] = col_value(static_cast<std::size_t>(iy));
  } else {
    for (std::size_t iy = 0; iy < total; ++iy) col[iy] = col_value(iy);
  }
  return lp_reduce(col, s, g.cell());
}

FiniteRankOperator compress(const FiniteRankOperator& a, double tol, std::optional<int> max_rank) {
  const int r = a.rank();
  if (r == 0) return a;
  const Grid& g = a.grid();
  const double cell = g.cell();
  Vec c(r);
  for (int i = 0; i < r; ++i) c(i) = a.terms()[static_cast<std::size_t>(i)].c;

  Mat gl = gram(a.terms(), true, cell);
  Mat gr = gram(a.terms(), false, cell);
  OrthFactor fl = orth_factor(gl);
  OrthFactor fr = orth_factor(gr);
  Mat core = fl.t * c.asDiagonal() * fr.t.adjoint();
  Eigen::JacobiSVD<Mat> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();

  double total2 = 0.0;
  for (int i = 0; i < sv.size(); ++i) total2 += sv(i) * sv(i);
  const double budget = tol * tol * total2;

  // Keep the leading singular values until the discarded tail fits the budget.
  int keep = sv.size();
  double tail = 0.0;
  while (keep > 0) {
    double next = tail + sv(keep - 1) * sv(keep - 1);
    if (next > budget) break;
    tail = next;
    --keep;
  }
  if (max_rank && keep > *max_rank) keep = *max_rank;

  std::vector<FiniteRankOperator::Term> terms;
  terms.reserve(static_cast<std::size_t>(keep));
  for (int k = 0; k < keep; ++k) {
    Vec lcoef = fl.basis * svd.matrixU().col(k);
    Vec rcoef = fr.basis * svd.matrixV().col(k);
    terms.push_back({cplx{sv(k), 0.0}, combine(g, a.terms(), true, lcoef),
                     combine(g, a.terms(), false, rcoef)});
  }
  if (!a.self_adjoint() && !a.nonneg())
    return FiniteRankOperator(g, std::move(terms), false, false);

  // Self-adjoint / nonneg input: redo through the single Gram eigenproblem so
  // the left and right families coincide term by term.
  Mat core_h = fl.t * c.asDiagonal() * fl.t.adjoint();
  Eigen::SelfAdjointEigenSolver<Mat> es(core_h);
  const auto& lam = es.eigenvalues();
  std::vector<int> order(static_cast<std::size_t>(lam.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return std::abs(lam(i)) < std::abs(lam(j)); });
  double htail = 0.0;
  std::size_t drop = 0;
  while (drop < order.size()) {
    double lv = lam(order[drop]);
    if (htail + lv * lv > budget) break;
    htail += lv * lv;
    ++drop;
  }
  std::vector<FiniteRankOperator::Term> hterms;
  for (std::size_t k = drop; k < order.size(); ++k) {
    double lv = lam(order[k]);
    if (a.nonneg() && lv < 0.0) lv = 0.0;
    Vec coef = fl.basis * es.eigenvectors().col(order[k]);
    GridFunction phi = combine(g, a.terms(), true, coef);
    hterms.push_back({cplx{lv, 0.0}, phi, phi});
  }
  if (max_rank && static_cast<int>(hterms.size()) > *max_rank) {
    std::sort(hterms.begin(), hterms.end(),
              [](const auto& x, const auto& y) { return std::abs(x.c) > std::abs(y.c); });
    hterms.resize(static_cast<std::size_t>(*max_rank));
  }
  return FiniteRankOperator(g, std::move(hterms), true, a.nonneg());
}

}  // namespace ksflow
