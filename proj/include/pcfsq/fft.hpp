#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>

#include "pcfsq/grid.hpp"

namespace pcfsq {

template <typename T>
class FftwArray {
 public:
  explicit FftwArray(std::size_t n) : n_(n) {
    ptr_ = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  }
  ~FftwArray() { fftw_free(ptr_); }
  FftwArray(const FftwArray&) = delete;
  FftwArray& operator=(const FftwArray&) = delete;
  T* data() { return ptr_; }
  const T* data() const { return ptr_; }
  T& operator[](std::size_t i) { return ptr_[i]; }
  const T& operator[](std::size_t i) const { return ptr_[i]; }
  std::size_t size() const { return n_; }

 private:
  T* ptr_ = nullptr;
  std::size_t n_ = 0;
};

// One immutable plan set per transform size, shared by all threads.
// Plans use FFTW_ESTIMATE so planning is deterministic run to run; execution
// goes through the new-array interface on per-thread buffers.
class FftPlans {
 public:
  static const FftPlans& get(int n) {
    static std::mutex mu;
    static std::map<int, FftPlans*> registry;
    std::lock_guard<std::mutex> lock(mu);
    auto it = registry.find(n);
    if (it == registry.end()) it = registry.emplace(n, new FftPlans(n)).first;
    return *it->second;
  }

  int n() const { return n_; }
  fftw_plan forward() const { return fwd_; }    // sign -1
  fftw_plan backward() const { return bwd_; }   // sign +1
  fftw_plan r2c() const { return r2c_; }
  fftw_plan c2r() const { return c2r_; }

 private:
  // FFTW_ESTIMATE keeps planning deterministic run to run; FFTW_UNALIGNED lets
  // the plans execute on any caller buffer (std::vector storage included).
  explicit FftPlans(int n) : n_(n) {
    constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    FftwArray<fftw_complex> a(n), b(n), h(n / 2 + 1);
    FftwArray<double> r(n);
    fwd_ = fftw_plan_dft_1d(n, a.data(), b.data(), FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_1d(n, a.data(), b.data(), FFTW_BACKWARD, flags);
    r2c_ = fftw_plan_dft_r2c_1d(n, r.data(), h.data(), flags);
    c2r_ = fftw_plan_dft_c2r_1d(n, h.data(), r.data(), flags);
  }

  int n_;
  fftw_plan fwd_, bwd_, r2c_, c2r_;
};

// Per-thread transform buffers. std::complex<double> and fftw_complex are
// layout compatible; the casts below are the documented FFTW usage.
class FftWorkspace {
 public:
  explicit FftWorkspace(int n)
      : plans_(FftPlans::get(n)), n_(n), ca_(n), cb_(n), half_(n / 2 + 1), real_(n) {}

  int n() const { return n_; }

  /// Phi_k = (1/n) sum_j phi_j exp(+i 2 pi j k / n): analysis transform for the
  /// exp(-i Omega tau) convention.
  void to_spectrum(const cplx* time_in, cplx* spec_out) {
    fftw_execute_dft(plans_.backward(), to_fftw(const_cast<cplx*>(time_in)), to_fftw(spec_out));
    const double inv = 1.0 / n_;
    for (int k = 0; k < n_; ++k) spec_out[k] *= inv;
  }

  /// phi_j = sum_k Phi_k exp(-i 2 pi j k / n): synthesis transform.
  void to_time(const cplx* spec_in, cplx* time_out) {
    fftw_execute_dft(plans_.forward(), to_fftw(const_cast<cplx*>(spec_in)), to_fftw(time_out));
  }

  /// Unnormalized half-complex transform of a real field (FFTW forward sign).
  void forward_r2c(double* real_in, cplx* half_out) {
    fftw_execute_dft_r2c(plans_.r2c(), real_in, to_fftw(half_out));
  }

  /// Inverse of forward_r2c up to a factor n. Destroys half_in.
  void backward_c2r(cplx* half_in, double* real_out) {
    fftw_execute_dft_c2r(plans_.c2r(), to_fftw(half_in), real_out);
  }

  // scratch buffers for callers
  cplx* scratch_a() { return reinterpret_cast<cplx*>(ca_.data()); }
  cplx* scratch_b() { return reinterpret_cast<cplx*>(cb_.data()); }
  cplx* scratch_half() { return reinterpret_cast<cplx*>(half_.data()); }
  double* scratch_real() { return real_.data(); }

 private:
  static fftw_complex* to_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

  const FftPlans& plans_;
  int n_;
  FftwArray<fftw_complex> ca_, cb_, half_;
  FftwArray<double> real_;
};

}  // namespace pcfsq
