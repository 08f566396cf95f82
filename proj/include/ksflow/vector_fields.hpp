#pragma once

#include "ksflow/operator.hpp"

namespace ksflow {

// j_l = x_l - 2 t p_l acting on an orbital: x phi + 2 i t d_l phi.
GridFunction j_apply(const GridFunction& phi, double t, int axis);

GridFunction x_apply(const GridFunction& phi, int axis);

// J_l kappa = [j_l, kappa]; rank doubles.
FiniteRankOperator J_commutator(const FiniteRankOperator& kappa, double t, int axis);

// D_l kappa = [d_l, kappa]; rank doubles.
FiniteRankOperator D_commutator(const FiniteRankOperator& kappa, int axis);

// U_t kappa U_t^* with U_t: psi -> e^{-i x^2 / 4t} psi. Requires t != 0.
FiniteRankOperator gauge_conjugate(const FiniteRankOperator& kappa, double t);

// Galilean boost conjugation: phase e^{i(v.x - |v|^2 t)} plus shift by 2vt.
FiniteRankOperator boost(const FiniteRankOperator& kappa, const std::vector<double>& v, double t);

// Apply J^alpha for a multi-index alpha (per-axis powers), compressing after
// each application with tol 1e-12.
FiniteRankOperator J_power(const FiniteRankOperator& kappa, double t, const std::vector<int>& alpha);
FiniteRankOperator D_power(const FiniteRankOperator& kappa, const std::vector<int>& alpha);

// All multi-indices with |alpha| <= s over d axes (including alpha = 0).
std::vector<std::vector<int>> multi_indices_up_to(int d, int s);

// W^s norm: sum_{|alpha| <= s} ||J^alpha kappa||_{I^2}; V^s the same with D.
double weighted_norm_W(const FiniteRankOperator& kappa, int s, double t);
double weighted_norm_V(const FiniteRankOperator& kappa, int s);

// hs norm of <x>^b kappa (multiplication weight) or <grad>^b kappa (Fourier).
double weight_x_norm(const FiniteRankOperator& kappa, int b);
double weight_grad_norm(const FiniteRankOperator& kappa, int b);

}  // namespace ksflow
