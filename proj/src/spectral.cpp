#include "retinal/spectral.hpp"

#include <fftw3.h>

#include <Eigen/Core>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace retinal {
namespace {

using PlanKey = std::tuple<int, int, int, int, int>;

struct PlanHandle {
  fftw_plan plan = nullptr;
  int alignment = 0;
  ~PlanHandle() {
    if (plan != nullptr) fftw_destroy_plan(plan);
  }
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Plans live for the whole process; the cache owns them.
std::map<PlanKey, std::shared_ptr<PlanHandle>>& plan_cache() {
  static std::map<PlanKey, std::shared_ptr<PlanHandle>> cache;
  return cache;
}

std::size_t footprint(int n, int howmany, int stride, int dist) {
  if (howmany < 0) return static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  return static_cast<std::size_t>((howmany - 1) * dist + (n - 1) * stride + 1);
}

std::shared_ptr<PlanHandle> make_plan(int n, int howmany, int stride, int dist, FftDirection d) {
  const PlanKey key{n, howmany, stride, dist, d == FftDirection::forward ? 0 : 1};
  std::lock_guard lock(planner_mutex());
  auto& cache = plan_cache();
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const std::size_t extent = footprint(n, howmany, stride, dist);
  // Plan on Eigen-allocated storage so that execute() on Eigen buffers
  // sees the same alignment.
  Eigen::VectorXcd scratch = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(extent));
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const int sign = d == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD;
  auto handle = std::make_shared<PlanHandle>();
  if (howmany < 0) {
    // The dense propagator spends most of its time here; measuring pays
    // for itself within a few steps.
    handle->plan = fftw_plan_dft_2d(n, n, buf, buf, sign, FFTW_MEASURE);
  } else {
    int dims[1] = {n};
    handle->plan = fftw_plan_many_dft(1, dims, howmany, buf, nullptr, stride, dist, buf, nullptr,
                                      stride, dist, sign, FFTW_ESTIMATE);
  }
  handle->alignment = fftw_alignment_of(reinterpret_cast<double*>(buf));
  cache.emplace(key, handle);
  return handle;
}

}  // namespace

struct BatchedFft::Impl {
  std::shared_ptr<PlanHandle> handle;
  std::size_t extent = 0;
};

BatchedFft::BatchedFft(int n, int howmany, int stride, int dist, FftDirection direction)
    : impl_(std::make_unique<Impl>()) {
  impl_->handle = make_plan(n, howmany, stride, dist, direction);
  impl_->extent = footprint(n, howmany, stride, dist);
}

BatchedFft BatchedFft::square(int n, FftDirection d) { return {n, -1, 1, n, d}; }

BatchedFft::~BatchedFft() = default;
BatchedFft::BatchedFft(BatchedFft&&) noexcept = default;
BatchedFft& BatchedFft::operator=(BatchedFft&&) noexcept = default;

void BatchedFft::execute(std::complex<double>* data) const {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  if (fftw_alignment_of(reinterpret_cast<double*>(p)) == impl_->handle->alignment) {
    fftw_execute_dft(impl_->handle->plan, p, p);
    return;
  }
  // Misaligned caller storage: go through an aligned copy.
  Eigen::VectorXcd tmp(static_cast<Eigen::Index>(impl_->extent));
  std::copy(data, data + impl_->extent, tmp.data());
  auto* q = reinterpret_cast<fftw_complex*>(tmp.data());
  fftw_execute_dft(impl_->handle->plan, q, q);
  std::copy(tmp.data(), tmp.data() + impl_->extent, data);
}

}  // namespace retinal
