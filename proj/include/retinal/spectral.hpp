#pragma once

// Thin RAII layer over FFTW for the batched 1-D transforms used by the
// split-step propagators. Plans are cached per layout and shared; planning
// is serialized because the FFTW planner is not reentrant.

#include <complex>
#include <memory>

namespace retinal {

enum class FftDirection { forward, backward };

/// Unnormalized batched 1-D DFT of `howmany` sequences of length n.
/// Element i of sequence b lives at data[b * dist + i * stride]. A
/// negative `howmany` selects the 2-D transform of an n x n block.
class BatchedFft {
 public:
  BatchedFft(int n, int howmany, int stride, int dist, FftDirection direction);
  ~BatchedFft();
  BatchedFft(const BatchedFft&) = delete;
  BatchedFft& operator=(const BatchedFft&) = delete;
  BatchedFft(BatchedFft&&) noexcept;
  BatchedFft& operator=(BatchedFft&&) noexcept;

  /// In-place transform. `data` must share the alignment of Eigen storage.
  void execute(std::complex<double>* data) const;

  /// Contiguous columns of an n x howmany column-major matrix.
  static BatchedFft columns(int n, int howmany, FftDirection d) { return {n, howmany, 1, n, d}; }
  /// Rows of an n x n column-major matrix.
  static BatchedFft rows(int n, FftDirection d) { return {n, n, n, 1, d}; }
  /// Two-dimensional transform of a contiguous n x n matrix.
  static BatchedFft square(int n, FftDirection d);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace retinal
