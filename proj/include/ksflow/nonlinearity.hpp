#pragma once

#include <string>

#include "ksflow/grid.hpp"

namespace ksflow {

// g(rho) = lambda1 v * rho + lambda2 rho^beta.
struct SelfInteraction {
  double lambda1 = 0.0;
  PotentialSpec potential;
  double lambda2 = 0.0;
  double beta = 2.0;
  double eps_reg = 1e-12;  // floor for rho^{beta-k} in derivative checks only

  bool trivial() const { return lambda1 == 0.0 && lambda2 == 0.0; }
};

enum class RangeClass { short_range, critical, long_range };
std::string to_string(RangeClass c);

GridFunction evaluate_g(const SelfInteraction& spec, const GridFunction& rho);

// Gateaux derivatives: dg xi = lambda1 v*xi + lambda2 beta rho^{beta-1} xi,
// d2g xi eta = lambda2 beta (beta-1) rho^{beta-2} xi eta.
GridFunction dg(const SelfInteraction& spec, const GridFunction& rho, const GridFunction& xi);
GridFunction d2g(const SelfInteraction& spec, const GridFunction& rho, const GridFunction& xi,
                 const GridFunction& eta);

// G(rho) = (lambda1/2) int rho v*rho + (lambda2/(beta+1)) int rho^{beta+1}.
double interaction_energy(const SelfInteraction& spec, const GridFunction& rho);

RangeClass classify_range(const SelfInteraction& spec, int d);

struct AdmissibilityReport {
  bool si2 = false;         // v index in (1,d) and beta > 1/min(d,2)
  bool si2_beta = false;    // the beta part of SI2 alone
  bool si2_riesz = false;   // the potential part of SI2 alone
  bool gcond_beta = false;  // wider ledger: beta >= 1/2 (d=3), > 1/2 (d=2), > 1 (d=1)
  bool pq_cond = false;     // witness (p,q,q') satisfying the index relations
  double witness_p = 0.0, witness_q = 0.0, witness_qp = 0.0;
  RangeClass range = RangeClass::short_range;
  bool admissible = false;  // SI2 holds (acceptance gate for non-exploratory runs)
  bool warn_wider_ledger_only = false;
  std::string summary;
};

AdmissibilityReport check_admissibility(const SelfInteraction& spec, int d);

}  // namespace ksflow
