#pragma once

#include <cstdint>
#include <functional>

#include "ksflow/nonlinearity.hpp"
#include "ksflow/operator.hpp"

namespace ksflow {

struct NormRow {
  double t = 0.0;
  double trace = 0.0;        // Tr gamma = ||kappa||_HS^2
  double energy = 0.0;       // Tr(-Delta gamma) + G(rho)
  double hs = 0.0;           // ||kappa||_HS
  double w1 = 0.0;           // W^1 norm
  double w2 = 0.0;           // W^2 norm
  double l2r_linf_c = 0.0;   // ||kappa||_{L^2_r L^inf_c}
  double gamma_inf = 0.0;    // ||gamma||_(inf)
  double boundary_mass = 0.0;
  double scat_residual = 0.0;    // ||a_{-t} k(t) - a_{-t'} k(t')||_HS vs previous record
  double commut_residual = 0.0;  // weighted-energy identity residual
};

struct NormSeries {
  std::vector<NormRow> rows;
};

struct Schedule {
  double t0 = 0.0;  // start time (restarts resume mid-trajectory)
  double t_final = 1.0;
  double dt = 1e-3;
  double record_every = 0.1;
  bool dyadic_snapshots = false;
  double boundary_alarm_threshold = 1e-3;
};

struct EvolutionState {
  FiniteRankOperator kappa;
  double t = 0.0;
};

struct Trajectory {
  NormSeries series;
  std::vector<EvolutionState> snapshots;  // dyadic times when requested
  FiniteRankOperator final_kappa;
  double final_time = 0.0;
  bool boundary_alarm = false;
};

// One Strang step of the conjugation flow d_t kappa = -i [h(rho_{k*k}), k]
// with h = -Delta + g: half free step on all orbitals, potential phase
// e^{-i g(rho) dt} with rho sampled after the half kinetic step, half free
// step. Second order in dt.
EvolutionState step_strang(const EvolutionState& state, const SelfInteraction& spec, double dt);

double total_energy(const FiniteRankOperator& kappa, const SelfInteraction& spec);

using RecordHook = std::function<void(const NormRow&, const EvolutionState&)>;

Trajectory evolve(const FiniteRankOperator& kappa0, const SelfInteraction& spec,
                  const Schedule& schedule, bool compute_w2 = true,
                  const RecordHook& hook = nullptr);

// Fixed-point iterate of the Duhamel map
//   Phi(k)(t) = a_t(k0) - i int_0^t a_{t-s}([g(rho(s)), k(s)]) ds,
// a_t the free conjugation; quadrature on nodes >= 8, returns the n_iter-th
// iterate at time T. Throws on divergence (iterate norm growth x10).
FiniteRankOperator picard_duhamel(const FiniteRankOperator& kappa0, const SelfInteraction& spec,
                                  double T, int n_iter, int nodes = 32);

struct AprioriReport {
  double s_ref = 10.0;
  double sup_ratio = 0.0;       // sup_{t >= s_ref} W^b(t) / W^b(s_ref)
  bool within_bound = false;    // sup_ratio <= 2
  double smallness = 0.0;       // |l1| W^b(s)^2 + |l2| W^b(s)^{2 beta}
};

AprioriReport apriori_monitor(const NormSeries& series, int b, double s_ref,
                              const SelfInteraction& spec);

// Residual of the weighted-energy identity along the flow at time state.t:
// finite difference of (1/2)||J kappa||^2 over one dt step against the
// commutator pairing term, normalized.
double commutation_residual(const EvolutionState& state, const SelfInteraction& spec, double dt);

// rho_{J gamma} = den([j, k*k]) computed from kappa (rank 2R composition).
GridFunction density_of_J_gamma(const FiniteRankOperator& kappa, double t, int axis);

// Rank-N mixture of Gaussian orbitals with random centers, phases and widths;
// weights normalized to Tr gamma = 1.
struct InitialDataParams {
  int rank = 1;
  std::uint64_t seed = 0;
  double width_min = 0.8, width_max = 1.2;
  double center_box = 0.0;  // centers uniform in [-center_box, center_box]
  double vmax = 0.0;        // phase velocities uniform in [-vmax, vmax]
};

FiniteRankOperator gaussian_mixture_initial(const Grid& g, const InitialDataParams& params);

// Free conjugation a_t(kappa) = e^{i Delta t} kappa e^{-i Delta t}.
FiniteRankOperator free_conjugation(const FiniteRankOperator& kappa, double t);

}  // namespace ksflow
