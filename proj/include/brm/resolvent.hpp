#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "brm/ensemble.hpp"

namespace brm {

using cplx = std::complex<double>;

struct FactorizeOptions {
  /// Pivots with |D_j| below this multiple of |Im z| trigger the dense fallback.
  double pivot_threshold = 1e-8;
  /// Column block size of the blocked kernels; bands narrower than two
  /// blocks, or block = 0, use the column-by-column kernels.
  int block = 96;
};

/// H - zI = L D L^T with L unit lower triangular of bandwidth w and D
/// diagonal, computed without pivoting (complex symmetric, not Hermitian).
/// Factors are laid out like the sample: a[j*(w+1) + k] holds L(j+k, j) for
/// k >= 1 and D_j for k = 0. With this layout the band is also a dense
/// column-major array of leading dimension w, which the blocked kernels hand
/// to BLAS.
class ShiftedBandFactorization {
 public:
  cplx shift() const { return z_; }
  long N() const { return N_; }
  int bandwidth() const { return w_; }
  cplx pivot(long j) const;
  /// L(j+k, j) for k >= 1.
  cplx lower(long j, int k) const;
  /// min_j |D_j| / |Im z|. At least 1 for real symmetric H.
  double min_pivot_ratio() const { return min_pivot_ratio_; }
  /// True when the pivot monitor tripped and the diagonal of the inverse
  /// was obtained from a dense LU solve instead.
  bool used_dense_fallback() const { return !fallback_diagonal_.empty(); }

 private:
  friend ShiftedBandFactorization factorize(const BandMatrixSample&, cplx,
                                            const FactorizeOptions&);
  friend std::vector<cplx> resolvent_diagonal(const ShiftedBandFactorization&);

  cplx z_;
  long N_ = 0;
  int w_ = 0;
  int block_ = 0;
  std::vector<cplx> a_;
  double min_pivot_ratio_ = 0.0;
  std::vector<cplx> fallback_diagonal_;
};

/// Throws DomainError when |Im z| < 1e-12.
ShiftedBandFactorization factorize(const BandMatrixSample& H, cplx z,
                                   const FactorizeOptions& opt = {});

/// G(x,x;z) for every 0-based index, by selected inversion of the factors.
std::vector<cplx> resolvent_diagonal(const ShiftedBandFactorization& fact);

/// (1/N) Tr (H - zI)^{-1}.
cplx normalized_trace(const ShiftedBandFactorization& fact);

/// max |(L D L^T - (H - zI))_{ij}| over the band.
double reconstruction_residual(const ShiftedBandFactorization& fact,
                               const BandMatrixSample& H);

/// Diagonal of (H - zI)^{-1} from a dense LU factorization. Oracle and
/// fallback path; O(N^3).
std::vector<cplx> resolvent_diagonal_dense(const BandMatrixSample& H, cplx z);

struct SpectralSample {
  std::vector<double> eigenvalues;  // nondecreasing
  std::uint64_t replica_index = 0;
  std::optional<EnsembleConfig> config;
};

inline constexpr long kDenseEigenCap = 4096;

/// All eigenvalues of H. Narrow bands use a band-aware tridiagonal
/// reduction, wide ones a dense divide-and-conquer solver. Refuses N > cap.
SpectralSample eigenvalues_dense(const BandMatrixSample& H, long cap = kDenseEigenCap);

/// (1/N) sum_j 1/(lambda_j - z).
cplx normalized_trace(std::span<const double> eigenvalues, cplx z);

/// sup_lambda |sigma(lambda; H) - F_sc(lambda)|, the Kolmogorov-Smirnov
/// distance between the empirical counting function and the semicircle CDF.
double counting_function_distance(std::span<const double> sorted_eigenvalues, double v);
double counting_function_distance(const SpectralSample& eigs, double v);

/// Centred index range {first, ..., last}.
struct IndexRange {
  long first = 0;
  long last = -1;
  long size() const { return last - first + 1; }
  bool contains(long x) const { return x >= first && x <= last; }
};

/// B_L = {x : |x| <= n - bL}. Throws DomainError when bL > n.
IndexRange boundary_set(long n, double b, double L);

void write_eigenvalues(std::ostream& os, const SpectralSample& eigs);

}  // namespace brm
