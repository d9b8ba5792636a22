// Times each kernel's OpenMP path against its serial reference and checks
// that the two agree. Usage: bench_kernels [n_rows] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include "stvar/kernels.hpp"
#include "stvar/rng.hpp"

using namespace stvar;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void report(const char* name, double serial, double parallel, bool agree) {
  std::printf("%-20s serial %9.4f ms  parallel %9.4f ms  speedup %5.2fx  %s\n", name, 1e3 * serial, 1e3 * parallel,
              serial / parallel, agree ? "agree" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const Eigen::Index n = argc > 1 ? std::atol(argv[1]) : 20000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;
  std::printf("threads: %d, rows: %ld, repeats: %d\n", omp_get_max_threads(), static_cast<long>(n), repeats);

  Rng rng(2024);
  const Eigen::MatrixXd data = random_matrix(rng, n, 64);
  const Eigen::MatrixXd nodes = random_matrix(rng, 20, 64);

  kernels::Assignment as, ap;
  const double s1 = best_of(repeats, [&] { as = kernels::assign_winners_serial(data, nodes); });
  const double p1 = best_of(repeats, [&] { ap = kernels::assign_winners(data, nodes, Exec::parallel); });
  report("assign_winners", s1, p1, as.winner == ap.winner);

  Eigen::MatrixXd weights = (-random_matrix(rng, 20, 20).cwiseAbs()).array().exp().matrix();
  kernels::BatchSums bs, bp;
  const double s2 = best_of(repeats, [&] { bs = kernels::batch_sums_serial(data, as.winner, weights); });
  const double p2 = best_of(repeats, [&] { bp = kernels::batch_sums(data, as.winner, weights, Exec::parallel); });
  report("batch_sums", s2, p2, bs.numerator.isApprox(bp.numerator, 1e-10));

  const Eigen::MatrixXd planar = random_matrix(rng, 20, 2);
  std::vector<int> order(20);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::MatrixXd candidates = random_matrix(rng, 201 * 201, 2);
  std::vector<int> cs, cp;
  const double s3 = best_of(repeats, [&] { cs = kernels::score_candidates_serial(candidates, planar, order); });
  const double p3 = best_of(repeats, [&] { cp = kernels::score_candidates(candidates, planar, order, Exec::parallel); });
  report("score_candidates", s3, p3, cs == cp);

  const Eigen::MatrixXd rows = random_matrix(rng, 800, 64);
  Eigen::MatrixXd ds, dp;
  const double s4 = best_of(repeats, [&] { ds = kernels::pairwise_distances_serial(rows); });
  const double p4 = best_of(repeats, [&] { dp = kernels::pairwise_distances(rows, Exec::parallel); });
  report("pairwise_distances", s4, p4, ds.isApprox(dp));
  return 0;
}
