#pragma once

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pdommd {

using cxd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Error taxonomy. Everything derives from Error so callers can catch one type;
// the concrete classes carry the contract names used throughout the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define PDOMMD_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

PDOMMD_DEFINE_ERROR(InvalidGrid);
PDOMMD_DEFINE_ERROR(GridMismatch);
PDOMMD_DEFINE_ERROR(NotPositiveDefinite);
PDOMMD_DEFINE_ERROR(NotPSD);
PDOMMD_DEFINE_ERROR(DegenerateTerm);
PDOMMD_DEFINE_ERROR(TransformUnavailable);
PDOMMD_DEFINE_ERROR(OutOfDomain);
PDOMMD_DEFINE_ERROR(RankOutOfRange);
PDOMMD_DEFINE_ERROR(ConvergenceError);
PDOMMD_DEFINE_ERROR(NotADensity);
PDOMMD_DEFINE_ERROR(DegenerateWitness);
PDOMMD_DEFINE_ERROR(UnsupportedPoint);
PDOMMD_DEFINE_ERROR(NoiseExhausted);
PDOMMD_DEFINE_ERROR(SpecError);
PDOMMD_DEFINE_ERROR(UsageError);
PDOMMD_DEFINE_ERROR(NumericalError);

#undef PDOMMD_DEFINE_ERROR

// Thread cap: PDOMMD_THREADS env var, else hardware concurrency.
inline int max_threads() {
  static const int cached = [] {
    if (const char* env = std::getenv("PDOMMD_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }();
  return cached;
}

// Deterministic data-parallel loop: [begin,end) is split into fixed
// contiguous blocks regardless of thread count, so any per-block results
// combined in block order are bit-reproducible.
template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, Fn&& body) {
  const std::int64_t count = end - begin;
  if (count <= 0) return;
  int nt = max_threads();
  if (nt == 1 || count < 256) {
    for (std::int64_t i = begin; i < end; ++i) body(i);
    return;
  }
  if (nt > count) nt = static_cast<int>(count);
  const std::int64_t chunk = (count + nt - 1) / nt;
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    const std::int64_t lo = begin + t * chunk;
    const std::int64_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::int64_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

// One thread per block regardless of block count; for coarse-grained
// reductions whose partial results are combined in block order.
template <typename Fn>
void parallel_blocks(int nblocks, Fn&& body) {
  if (nblocks <= 1 || max_threads() == 1) {
    for (int b = 0; b < nblocks; ++b) body(b);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nblocks);
  for (int b = 0; b < nblocks; ++b) pool.emplace_back([b, &body] { body(b); });
  for (auto& th : pool) th.join();
}

// splitmix64: stable per-trial seed derivation.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace pdommd
