#include "brm/resolvent.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>
#include <string>

#include "brm/errors.hpp"
#include "brm/theory.hpp"

namespace brm {

cplx ShiftedBandFactorization::pivot(long j) const {
  return a_[static_cast<std::size_t>(j) * (w_ + 1)];
}

cplx ShiftedBandFactorization::lower(long j, int k) const {
  return a_[static_cast<std::size_t>(j) * (w_ + 1) + k];
}

namespace {

const cplx kOne(1.0, 0.0), kZero(0.0, 0.0), kMinusOne(-1.0, 0.0);

void single_threaded_blas() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

std::size_t idx(long col, int ld, long k) { return static_cast<std::size_t>(col) * ld + k; }

// Eliminates columns [begin, end). Rank-one updates are applied only to
// columns below `limit`; the blocked caller updates the rest. Returns false
// if a pivot falls below `monitor`.
bool eliminate_columns(cplx* a, long N, int w, long begin, long end, long limit, double monitor,
                       double& min_mag, std::vector<cplx>& t) {
  const int ld = w + 1;
  for (long j = begin; j < end; ++j) {
    cplx* col = a + idx(j, ld, 0);
    const cplx d = col[0];
    const double mag = std::abs(d);
    min_mag = std::min(min_mag, mag);
    if (!(mag >= monitor)) return false;
    const cplx dinv = 1.0 / d;
    const int m = static_cast<int>(std::min<long>(w, N - 1 - j));
    for (int k = 1; k <= m; ++k) {
      t[k] = col[k];
      col[k] *= dinv;
    }
    const int kmax = static_cast<int>(std::min<long>(m, limit - 1 - j));
    for (int k = 1; k <= kmax; ++k) {
      const cplx x = t[k];
      cplx* __restrict y = a + idx(j + k, ld, 0);
      const cplx* __restrict l = col + k;
      const int len = m - k + 1;
      for (int r = 0; r < len; ++r) y[r] -= x * l[r];
    }
  }
  return true;
}

// Selected inversion one column at a time, O(N w^2).
void invert_unblocked(const cplx* a, long N, int w, cplx* z, cplx* diag) {
  const int ld = w + 1;
  std::vector<cplx> y(ld);
  for (long i = N - 1; i >= 0; --i) {
    const int m = static_cast<int>(std::min<long>(w, N - 1 - i));
    const cplx* l = a + idx(i, ld, 0);
    std::fill(y.begin(), y.begin() + m + 1, kZero);
    // y_q = sum_r Z(i+q, i+r) L(i+r, i); Z is symmetric and only its lower
    // band is stored, so each stored entry feeds two terms.
    for (int q = 1; q <= m; ++q) {
      const cplx* __restrict zc = z + idx(i + q, ld, 0);
      const cplx lq = l[q];
      cplx s = zc[0] * lq;
      const int len = m - q;
      cplx* __restrict yy = y.data() + q + 1;
      const cplx* __restrict ll = l + q + 1;
      const cplx* __restrict pp = zc + 1;
      for (int r = 0; r < len; ++r) {
        yy[r] += pp[r] * lq;
        s += pp[r] * ll[r];
      }
      y[q] += s;
    }
    cplx g = 1.0 / l[0];
    cplx* zi = z + idx(i, ld, 0);
    for (int q = 1; q <= m; ++q) {
      zi[q] = -y[q];
      g += l[q] * y[q];
    }
    zi[0] = g;
    diag[i] = g;
  }
}

// Blocked right-looking factorization: each panel of nb columns is
// eliminated column by column, then the band below it receives one
// rank-nb update  A_TT -= (L sqrt D)(L sqrt D)^T  through zsyrk on the
// ld = w dense view of the band.
bool factor_blocked(cplx* a, long N, int w, int nb, double monitor, double& min_mag) {
  const int ld = w + 1;
  std::vector<cplx> t(ld), V(static_cast<std::size_t>(w) * nb), sq(nb);
  for (long j0 = 0; j0 < N; j0 += nb) {
    const int jb = static_cast<int>(std::min<long>(nb, N - j0));
    if (!eliminate_columns(a, N, w, j0, j0 + jb, j0 + jb, monitor, min_mag, t)) return false;
    const long c0 = j0 + jb;
    const int mt = static_cast<int>(std::min<long>(w, N - c0));
    if (mt <= 0) continue;
    for (int k = 0; k < jb; ++k) sq[k] = std::sqrt(a[idx(j0 + k, ld, 0)]);
    for (int k = 0; k < jb; ++k) {
      const long K = j0 + k;
      cplx* v = V.data() + static_cast<std::size_t>(k) * mt;
      for (int r = 0; r < mt; ++r) {
        const long off = c0 + r - K;
        v[r] = off <= w ? a[idx(K, ld, off)] * sq[k] : kZero;
      }
    }
    cblas_zsyrk(CblasColMajor, CblasLower, CblasNoTrans, mt, jb, &kMinusOne, V.data(), mt, &kOne,
                a + idx(c0, ld, 0), w);
  }
  return true;
}

// Blocked selected inversion. For the column block I with the band rows T
// below it:  Z_TI = -Z_TT L_TI L_II^{-1}  and
// Z_II = (L_II^{-T} D_I^{-1} - Z_TI^T L_TI) L_II^{-1}.
void invert_blocked(const cplx* a, long N, int w, int nb, cplx* z, cplx* diag) {
  const int ld = w + 1;
  std::vector<cplx> Lii(static_cast<std::size_t>(nb) * nb), Wl(static_cast<std::size_t>(w) * nb),
      X(static_cast<std::size_t>(w) * nb), M(static_cast<std::size_t>(nb) * nb),
      Y(static_cast<std::size_t>(nb) * nb);
  for (long iend = N; iend > 0;) {
    const long i0 = std::max<long>(0, iend - nb);
    const int ib = static_cast<int>(iend - i0);
    for (int c = 0; c < ib; ++c) {
      for (int r = 0; r < ib; ++r) {
        Lii[c * ib + r] = r == c ? kOne : (r > c ? a[idx(i0 + c, ld, r - c)] : kZero);
        M[c * ib + r] = r == c ? 1.0 / a[idx(i0 + c, ld, 0)] : kZero;
      }
    }
    // M = L_II^{-T} D_I^{-1}
    cblas_ztrsm(CblasColMajor, CblasLeft, CblasLower, CblasTrans, CblasUnit, ib, ib, &kOne,
                Lii.data(), ib, M.data(), ib);
    const long t0 = iend;
    const int mt = static_cast<int>(std::min<long>(w, N - t0));
    if (mt > 0) {
      for (int c = 0; c < ib; ++c) {
        const long K = i0 + c;
        for (int r = 0; r < mt; ++r) {
          const long off = t0 + r - K;
          Wl[static_cast<std::size_t>(c) * mt + r] = off <= w ? a[idx(K, ld, off)] : kZero;
        }
      }
      cblas_zsymm(CblasColMajor, CblasLeft, CblasLower, mt, ib, &kOne, z + idx(t0, ld, 0), w,
                  Wl.data(), mt, &kZero, X.data(), mt);
      cblas_ztrsm(CblasColMajor, CblasRight, CblasLower, CblasNoTrans, CblasUnit, mt, ib,
                  &kMinusOne, Lii.data(), ib, X.data(), mt);
      for (int c = 0; c < ib; ++c) {
        const long K = i0 + c;
        for (int r = 0; r < mt; ++r) {
          const long off = t0 + r - K;
          if (off <= w) z[idx(K, ld, off)] = X[static_cast<std::size_t>(c) * mt + r];
        }
      }
      cblas_zgemm(CblasColMajor, CblasTrans, CblasNoTrans, ib, ib, mt, &kOne, X.data(), mt,
                  Wl.data(), mt, &kZero, Y.data(), ib);
      for (int e = 0; e < ib * ib; ++e) M[e] -= Y[e];
    }
    cblas_ztrsm(CblasColMajor, CblasRight, CblasLower, CblasNoTrans, CblasUnit, ib, ib, &kOne,
                Lii.data(), ib, M.data(), ib);
    for (int c = 0; c < ib; ++c) {
      for (int r = c; r < ib; ++r) z[idx(i0 + c, ld, r - c)] = M[c * ib + r];
      diag[i0 + c] = M[c * ib + c];
    }
    iend = i0;
  }
}

bool use_blocked(int w, int nb) { return nb > 0 && w >= 2 * nb; }

}  // namespace

ShiftedBandFactorization factorize(const BandMatrixSample& H, cplx z,
                                   const FactorizeOptions& opt) {
  if (!(std::abs(z.imag()) >= 1e-12)) {
    throw DomainError("spectral parameter too close to the real axis (|Im z| < 1e-12)");
  }
  ShiftedBandFactorization F;
  F.z_ = z;
  F.N_ = H.N();
  F.w_ = H.bandwidth();
  F.block_ = use_blocked(F.w_, opt.block) ? opt.block : 0;
  const long N = F.N_;
  const int w = F.w_;
  const int ld = w + 1;
  F.a_.resize(H.band().size());
  for (std::size_t e = 0; e < F.a_.size(); ++e) F.a_[e] = H.band()[e];
  for (long j = 0; j < N; ++j) F.a_[idx(j, ld, 0)] -= z;

  const double monitor = opt.pivot_threshold * std::abs(z.imag());
  double min_mag = std::numeric_limits<double>::infinity();
  bool ok;
  if (F.block_ > 0) {
    single_threaded_blas();
    ok = factor_blocked(F.a_.data(), N, w, F.block_, monitor, min_mag);
  } else {
    std::vector<cplx> t(ld);
    ok = eliminate_columns(F.a_.data(), N, w, 0, N, N, monitor, min_mag, t);
  }
  F.min_pivot_ratio_ = min_mag / std::abs(z.imag());
  if (!ok) F.fallback_diagonal_ = resolvent_diagonal_dense(H, z);
  return F;
}

std::vector<cplx> resolvent_diagonal(const ShiftedBandFactorization& F) {
  if (F.used_dense_fallback()) return F.fallback_diagonal_;
  std::vector<cplx> diag(F.N_);
  std::vector<cplx> z(F.a_.size(), kZero);
  if (F.block_ > 0) {
    invert_blocked(F.a_.data(), F.N_, F.w_, F.block_, z.data(), diag.data());
  } else {
    invert_unblocked(F.a_.data(), F.N_, F.w_, z.data(), diag.data());
  }
  return diag;
}

cplx normalized_trace(const ShiftedBandFactorization& F) {
  const auto diag = resolvent_diagonal(F);
  cplx sum = 0.0;
  for (const auto& g : diag) sum += g;
  return sum / static_cast<double>(F.N());
}

double reconstruction_residual(const ShiftedBandFactorization& F, const BandMatrixSample& H) {
  if (F.used_dense_fallback()) {
    throw DomainError("factorization used the dense fallback; no band factors to check");
  }
  const long N = F.N();
  const int w = F.bandwidth();
  double worst = 0.0;
  for (long j = 0; j < N; ++j) {
    const int m = static_cast<int>(std::min<long>(w, N - 1 - j));
    for (int d = 0; d <= m; ++d) {
      const long i = j + d;
      // (L D L^T)(i, j) = sum_{k <= j, i-k <= w} L(i,k) D_k L(j,k)
      cplx s = 0.0;
      for (long k = std::max<long>(0, i - w); k <= j; ++k) {
        const cplx lik = i == k ? cplx(1.0) : F.lower(k, static_cast<int>(i - k));
        const cplx ljk = j == k ? cplx(1.0) : F.lower(k, static_cast<int>(j - k));
        s += lik * F.pivot(k) * ljk;
      }
      const cplx target = H.lower(j, d) - (d == 0 ? F.shift() : cplx(0.0));
      worst = std::max(worst, std::abs(s - target));
    }
  }
  return worst;
}

std::vector<cplx> resolvent_diagonal_dense(const BandMatrixSample& H, cplx z) {
  const long N = H.N();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
  for (long j = 0; j < N; ++j) {
    const int m = static_cast<int>(std::min<long>(H.bandwidth(), N - 1 - j));
    for (int k = 0; k <= m; ++k) {
      A(j + k, j) = H.lower(j, k);
      A(j, j + k) = H.lower(j, k);
    }
    A(j, j) -= z;
  }
  const Eigen::MatrixXcd G = A.partialPivLu().inverse();
  std::vector<cplx> diag(N);
  for (long i = 0; i < N; ++i) diag[i] = G(i, i);
  return diag;
}

SpectralSample eigenvalues_dense(const BandMatrixSample& H, long cap) {
  const long N = H.N();
  if (N > cap) {
    throw DomainError("dense eigensolver refused: N = " + std::to_string(N) +
                      " exceeds the cap of " + std::to_string(cap));
  }
  SpectralSample out;
  out.replica_index = H.replica_index();
  out.config = H.config();
  out.eigenvalues.resize(N);
  const int w = H.bandwidth();
  lapack_int info = 0;
  if (static_cast<long>(w) * 16 <= N) {
    std::vector<double> ab = H.band();
    info = LAPACKE_dsbev(LAPACK_COL_MAJOR, 'N', 'L', static_cast<lapack_int>(N), w, ab.data(),
                         w + 1, out.eigenvalues.data(), nullptr, 1);
  } else {
    std::vector<double> a(static_cast<std::size_t>(N) * N, 0.0);
    for (long j = 0; j < N; ++j) {
      const int m = static_cast<int>(std::min<long>(w, N - 1 - j));
      for (int k = 0; k <= m; ++k) a[static_cast<std::size_t>(j) * N + j + k] = H.lower(j, k);
    }
    info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', static_cast<lapack_int>(N), a.data(),
                          static_cast<lapack_int>(N), out.eigenvalues.data());
  }
  if (info != 0) {
    throw NumericalError("symmetric eigensolver failed, info = " + std::to_string(info),
                         std::numeric_limits<double>::infinity());
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  return out;
}

cplx normalized_trace(std::span<const double> eigenvalues, cplx z) {
  cplx sum = 0.0;
  for (double lambda : eigenvalues) sum += 1.0 / (lambda - z);
  return sum / static_cast<double>(eigenvalues.size());
}

double counting_function_distance(std::span<const double> eigs, double v) {
  const double n = static_cast<double>(eigs.size());
  double d = 0.0;
  for (std::size_t j = 0; j < eigs.size(); ++j) {
    const double F = semicircle_cdf(eigs[j], v);
    d = std::max({d, (j + 1) / n - F, F - j / n});
  }
  return d;
}

double counting_function_distance(const SpectralSample& eigs, double v) {
  return counting_function_distance(std::span<const double>(eigs.eigenvalues), v);
}

IndexRange boundary_set(long n, double b, double L) {
  if (!(L >= 0.0)) throw DomainError("boundary depth L must be nonnegative");
  const double reach = static_cast<double>(n) - b * L;
  if (reach < 0.0) throw DomainError("boundary set is empty (bL > n)");
  const long m = static_cast<long>(std::floor(reach));
  return {-m, m};
}

void write_eigenvalues(std::ostream& os, const SpectralSample& eigs) {
  const auto old_precision = os.precision(17);
  for (double x : eigs.eigenvalues) os << x << '\n';
  os.precision(old_precision);
}

}  // namespace brm
