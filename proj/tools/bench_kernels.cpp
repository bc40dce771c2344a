// Compares the serial reference kernels against the OpenMP-dispatched ones:
// verifies bit-identical outputs, then reports timings side by side.

#include <cstdio>
#include <string>
#include <vector>

#include "daln/kernels.hpp"
#include "daln/matrix.hpp"
#include "daln/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#else
#include <chrono>
#endif

namespace {

double now_seconds() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
#endif
}

daln::Matrix random_matrix(int rows, int cols, daln::RngStream& rng) {
  daln::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

struct BenchResult {
  double serial_sec = 0.0;
  double parallel_sec = 0.0;
  bool identical = false;
};

template <typename SerialFn, typename ParallelFn>
BenchResult bench(int reps, SerialFn&& serial_fn, ParallelFn&& parallel_fn) {
  BenchResult r;
  auto ref = serial_fn();
  auto par = parallel_fn();
  r.identical = (ref == par);

  double t0 = now_seconds();
  for (int i = 0; i < reps; ++i) serial_fn();
  r.serial_sec = (now_seconds() - t0) / reps;

  t0 = now_seconds();
  for (int i = 0; i < reps; ++i) parallel_fn();
  r.parallel_sec = (now_seconds() - t0) / reps;
  return r;
}

void report(const std::string& name, const BenchResult& r) {
  std::printf("%-22s serial %10.6fs  parallel %10.6fs  speedup %5.2fx  %s\n",
              name.c_str(), r.serial_sec, r.parallel_sec,
              r.parallel_sec > 0.0 ? r.serial_sec / r.parallel_sec : 0.0,
              r.identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int size = 384;
  int reps = 5;
  if (argc > 1) size = std::stoi(argv[1]);
  if (argc > 2) reps = std::stoi(argv[2]);

#ifdef _OPENMP
  std::printf("openmp enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("openmp not enabled; both paths run serial code\n");
#endif
  std::printf("matrix size %d, %d reps per timing\n\n", size, reps);

  auto rng = daln::RngStream::for_purpose(7, "bench");
  const daln::Matrix a = random_matrix(size, size, rng);
  const daln::Matrix b = random_matrix(size, size, rng);

  bool all_identical = true;
  {
    auto r = bench(
        reps, [&] { return daln::kernels::serial::matmul(a, b); },
        [&] { return daln::kernels::matmul(a, b); });
    report("matmul", r);
    all_identical &= r.identical;
  }
  {
    auto r = bench(
        reps,
        [&] {
          daln::Matrix acc(a.rows(), b.rows());
          daln::kernels::serial::matmul_acc_nt(acc, a, b);
          return acc;
        },
        [&] {
          daln::Matrix acc(a.rows(), b.rows());
          daln::kernels::matmul_acc_nt(acc, a, b);
          return acc;
        });
    report("matmul_acc_nt", r);
    all_identical &= r.identical;
  }
  {
    auto r = bench(
        reps,
        [&] {
          daln::Matrix acc(a.cols(), b.cols());
          daln::kernels::serial::matmul_acc_tn(acc, a, b);
          return acc;
        },
        [&] {
          daln::Matrix acc(a.cols(), b.cols());
          daln::kernels::matmul_acc_tn(acc, a, b);
          return acc;
        });
    report("matmul_acc_tn", r);
    all_identical &= r.identical;
  }
  {
    auto r = bench(
        reps, [&] { return daln::kernels::serial::pairwise_sq_dists(a, b); },
        [&] { return daln::kernels::pairwise_sq_dists(a, b); });
    report("pairwise_sq_dists", r);
    all_identical &= r.identical;
  }
  {
    auto r = bench(
        reps, [&] { return daln::kernels::serial::softmax_rows(a); },
        [&] { return daln::kernels::softmax_rows(a); });
    report("softmax_rows", r);
    all_identical &= r.identical;
  }
  {
    auto r = bench(
        reps, [&] { return daln::kernels::serial::tanh_eltwise(a); },
        [&] { return daln::kernels::tanh_eltwise(a); });
    report("tanh_eltwise", r);
    all_identical &= r.identical;
  }
  {
    const daln::Matrix d = daln::kernels::pairwise_sq_dists(a, a);
    auto r = bench(
        reps,
        [&] {
          return daln::Matrix::filled(
              1, 1, daln::kernels::serial::rbf_sum(d, 2.0, true));
        },
        [&] {
          return daln::Matrix::filled(1, 1,
                                      daln::kernels::rbf_sum(d, 2.0, true));
        });
    report("rbf_sum", r);
    all_identical &= r.identical;
  }

  if (!all_identical) {
    std::printf("\nserial and parallel outputs disagree\n");
    return 1;
  }
  std::printf("\nall kernels bit-identical across paths\n");
  return 0;
}
