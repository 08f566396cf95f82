#include "ksflow/nonlinearity.hpp"

#include <cmath>
#include <sstream>

namespace ksflow {

namespace {

// rho is a physical density: real up to roundoff, nonnegative up to -1e-10.
std::vector<double> clamped_density(const GridFunction& rho) {
  std::vector<double> out(rho.v.size());
  for (std::size_t k = 0; k < rho.v.size(); ++k) {
    double r = rho.v[k].real();
    if (r < -1e-10) throw std::domain_error("negative density beyond tolerance");
    out[k] = std::max(r, 0.0);
  }
  return out;
}

}  // namespace

std::string to_string(RangeClass c) {
  switch (c) {
    case RangeClass::short_range: return "short_range";
    case RangeClass::critical: return "critical";
    case RangeClass::long_range: return "long_range";
  }
  return "?";
}

GridFunction evaluate_g(const SelfInteraction& spec, const GridFunction& rho) {
  const Grid& g = *rho.grid;
  GridFunction out(g);
  std::vector<double> r = clamped_density(rho);
  if (spec.lambda1 != 0.0 && spec.potential.kind != PotentialKind::none) {
    GridFunction rr(g);
    for (std::size_t k = 0; k < r.size(); ++k) rr.v[k] = r[k];
    GridFunction conv = convolve_potential(rr, spec.potential);
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += spec.lambda1 * conv.v[k].real();
  }
  if (spec.lambda2 != 0.0) {
    for (std::size_t k = 0; k < out.v.size(); ++k)
      out.v[k] += spec.lambda2 * std::pow(r[k], spec.beta);
  }
  return out;
}

GridFunction dg(const SelfInteraction& spec, const GridFunction& rho, const GridFunction& xi) {
  const Grid& g = *rho.grid;
  GridFunction out(g);
  if (spec.lambda1 != 0.0 && spec.potential.kind != PotentialKind::none) {
    GridFunction conv = convolve_potential(xi, spec.potential);
    for (std::size_t k = 0; k < out.v.size(); ++k) out.v[k] += spec.lambda1 * conv.v[k];
  }
  if (spec.lambda2 != 0.0) {
    std::vector<double> r = clamped_density(rho);
    for (std::size_t k = 0; k < out.v.size(); ++k) {
      double base = (spec.beta < 1.0) ? std::max(r[k], spec.eps_reg) : r[k];
      out.v[k] += spec.lambda2 * spec.beta * std::pow(base, spec.beta - 1.0) * xi.v[k];
    }
  }
  return out;
}

GridFunction d2g(const SelfInteraction& spec, const GridFunction& rho, const GridFunction& xi,
                 const GridFunction& eta) {
  const Grid& g = *rho.grid;
  GridFunction out(g);
  if (spec.lambda2 != 0.0 && spec.beta != 1.0) {
    std::vector<double> r = clamped_density(rho);
    for (std::size_t k = 0; k < out.v.size(); ++k) {
      double base = (spec.beta < 2.0) ? std::max(r[k], spec.eps_reg) : r[k];
      out.v[k] += spec.lambda2 * spec.beta * (spec.beta - 1.0) *
                  std::pow(base, spec.beta - 2.0) * xi.v[k] * eta.v[k];
    }
  }
  return out;
}

double interaction_energy(const SelfInteraction& spec, const GridFunction& rho) {
  const Grid& g = *rho.grid;
  std::vector<double> r = clamped_density(rho);
  double e = 0.0;
  if (spec.lambda1 != 0.0 && spec.potential.kind != PotentialKind::none) {
    GridFunction rr(g);
    for (std::size_t k = 0; k < r.size(); ++k) rr.v[k] = r[k];
    GridFunction conv = convolve_potential(rr, spec.potential);
    double acc = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) acc += r[k] * conv.v[k].real();
    e += 0.5 * spec.lambda1 * g.cell() * acc;
  }
  if (spec.lambda2 != 0.0) {
    double acc = 0.0;
    for (double v : r) acc += std::pow(v, spec.beta + 1.0);
    e += spec.lambda2 / (spec.beta + 1.0) * g.cell() * acc;
  }
  return e;
}

RangeClass classify_range(const SelfInteraction& spec, int d) {
  auto worse = [](RangeClass a, RangeClass b) {
    return static_cast<int>(a) > static_cast<int>(b) ? a : b;
  };
  RangeClass cls = RangeClass::short_range;
  if (spec.lambda1 != 0.0) {
    switch (spec.potential.kind) {
      case PotentialKind::none:
        break;
      case PotentialKind::delta:
        // v = delta scales with alpha = d; critical only when d = 1.
        cls = worse(cls, d == 1 ? RangeClass::critical : RangeClass::short_range);
        break;
      case PotentialKind::riesz: {
        double a = spec.potential.riesz_a;
        RangeClass rc = a > 1.0 ? RangeClass::short_range
                                : (a == 1.0 ? RangeClass::critical : RangeClass::long_range);
        cls = worse(cls, rc);
        break;
      }
    }
  }
  if (spec.lambda2 != 0.0) {
    double crit = 1.0 / d;
    RangeClass pc = spec.beta > crit ? RangeClass::short_range
                                     : (spec.beta == crit ? RangeClass::critical
                                                          : RangeClass::long_range);
    cls = worse(cls, pc);
  }
  return cls;
}

AdmissibilityReport check_admissibility(const SelfInteraction& spec, int d) {
  AdmissibilityReport rep;
  const bool has_riesz = spec.lambda1 != 0.0 && spec.potential.kind == PotentialKind::riesz;
  const bool has_power = spec.lambda2 != 0.0;

  rep.si2_beta = !has_power || spec.beta > 1.0 / std::min(d, 2);
  rep.si2_riesz = true;
  if (has_riesz) {
    double a = spec.potential.riesz_a;
    rep.si2_riesz = a > 1.0 && a < d;
  }
  if (spec.lambda1 != 0.0 && spec.potential.kind != PotentialKind::none && d == 1)
    rep.si2_riesz = false;  // the convolution term is omitted for d = 1
  rep.si2 = rep.si2_beta && rep.si2_riesz;

  if (!has_power) {
    rep.gcond_beta = true;
  } else if (d == 3) {
    rep.gcond_beta = spec.beta >= 0.5;
  } else if (d == 2) {
    rep.gcond_beta = spec.beta > 0.5;
  } else {
    rep.gcond_beta = spec.beta > 1.0;
  }

  // Witness exponents for the Riesz part: dg xi = v*xi with v in L^{d/a}_w
  // gives ||v*xi||_p <= ||xi||_q for 1/p = 1/q + a/d - 1. Scan q for a pair
  // meeting p >= d, q <= d/(d-2) and 1 + 1/p - 1/q > 1/d; d2g = 0, q' = 2.
  rep.pq_cond = !has_riesz;
  if (has_riesz) {
    double a = spec.potential.riesz_a;
    double qmax = (d > 2) ? static_cast<double>(d) / (d - 2) : 64.0;
    for (double q = 1.0; q <= qmax + 1e-12; q += 1.0 / 64.0) {
      double inv_p = 1.0 / q + a / d - 1.0;
      if (inv_p <= 0.0 || inv_p > 1.0) continue;
      double p = 1.0 / inv_p;
      if (p < d) continue;
      if (1.0 + 1.0 / p - 1.0 / q > 1.0 / d) {
        rep.pq_cond = true;
        rep.witness_p = p;
        rep.witness_q = q;
        rep.witness_qp = 2.0;
        break;
      }
    }
  }

  rep.range = classify_range(spec, d);
  rep.admissible = rep.si2 && (!has_riesz || rep.pq_cond);
  rep.warn_wider_ledger_only = !rep.si2 && rep.gcond_beta;

  std::ostringstream ss;
  ss << "SI2=" << (rep.si2 ? "pass" : "fail") << " (beta " << (rep.si2_beta ? "pass" : "fail")
     << ", potential " << (rep.si2_riesz ? "pass" : "fail") << ")"
     << "; g-condbeta=" << (rep.gcond_beta ? "pass" : "fail")
     << "; pqcond=" << (rep.pq_cond ? "pass" : "fail");
  if (rep.witness_p > 0.0)
    ss << " (p=" << rep.witness_p << ", q=" << rep.witness_q << ", q'=" << rep.witness_qp << ")";
  ss << "; range=" << to_string(rep.range);
  if (rep.warn_wider_ledger_only) ss << "; warning: admissible only under the wider ledger";
  rep.summary = ss.str();
  return rep;
}

}  // namespace ksflow
