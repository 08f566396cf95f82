// Compare the serial reference and OpenMP variants of the local-norm kernels.
#include <chrono>
#include <cmath>
#include <cstdio>

#include "ksflow/analysis.hpp"
#include "ksflow/operator.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace ksflow;

namespace {

template <class Fn>
double time_ms(Fn&& fn, int reps) {
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: disabled\n");
#endif
  const double inf = std::numeric_limits<double>::infinity();

  for (int d : {1, 2}) {
    const int n = d == 1 ? 2048 : 96;
    Grid g = Grid::make(d, n, 32.0);
    FiniteRankOperator k = materialize_random_op(g, draw_random_op(7, d, 4));
    FiniteRankOperator gamma = compose(adjoint(k), k);
    const int reps = d == 1 ? 3 : 2;

    double serial_rc = 0.0, parallel_rc = 0.0;
    double t_s = time_ms([&] { serial_rc = local_norm_rc(k, 2.0, inf, Exec::serial); }, reps);
    double t_p = time_ms([&] { parallel_rc = local_norm_rc(k, 2.0, inf, Exec::parallel); }, reps);
    std::printf("d=%d local_norm_rc(2,inf): serial %.1f ms, parallel %.1f ms, speedup %.2fx, "
                "rel diff %.2e\n",
                d, t_s, t_p, t_s / t_p, std::abs(serial_rc - parallel_rc) / serial_rc);

    double serial_g = 0.0, parallel_g = 0.0;
    t_s = time_ms([&] { serial_g = gamma_local_norm(gamma, 4.0, Exec::serial); }, reps);
    t_p = time_ms([&] { parallel_g = gamma_local_norm(gamma, 4.0, Exec::parallel); }, reps);
    std::printf("d=%d gamma_local_norm(4): serial %.1f ms, parallel %.1f ms, speedup %.2fx, "
                "rel diff %.2e\n",
                d, t_s, t_p, t_s / t_p, std::abs(serial_g - parallel_g) / serial_g);
  }
  return 0;
}
