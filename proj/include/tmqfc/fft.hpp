#pragma once

// Thin FFTW wrapper. Plans are cached per (size, direction) behind a mutex;
// execution uses the new-array interface, which FFTW guarantees thread-safe.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

namespace tmqfc::fft {

using cplx = std::complex<double>;

namespace detail {

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, bool>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }

  // In-place and out-of-place execution need distinct plans.
  fftw_plan get(int n, int sign, bool inplace) {
    std::lock_guard lock(mutex);
    auto key = std::tuple{n, sign, inplace};
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    std::vector<cplx> in(n), out(n);
    auto* pin = reinterpret_cast<fftw_complex*>(in.data());
    auto* pout = inplace ? pin : reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan p = fftw_plan_dft_1d(n, pin, pout, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(key, p);
    return p;
  }
};

inline PlanCache& cache() {
  static PlanCache c;
  return c;
}

inline void run(std::span<const cplx> in, std::span<cplx> out, int sign) {
  const bool inplace = in.data() == out.data();
  fftw_plan p = cache().get(static_cast<int>(in.size()), sign, inplace);
  // FFTW takes a non-const input pointer but does not write to it for out-of-place plans.
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Unnormalized forward transform, kernel exp(-i 2 pi k j / n).
inline void forward(std::span<const cplx> in, std::span<cplx> out) {
  detail::run(in, out, FFTW_FORWARD);
}

/// Unnormalized inverse transform, kernel exp(+i 2 pi k j / n).
inline void inverse(std::span<const cplx> in, std::span<cplx> out) {
  detail::run(in, out, FFTW_BACKWARD);
}

inline void forward_inplace(std::vector<cplx>& data) { forward(data, data); }
inline void inverse_inplace(std::vector<cplx>& data) { inverse(data, data); }

}  // namespace tmqfc::fft
