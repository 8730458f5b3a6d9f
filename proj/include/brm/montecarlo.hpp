#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brm/ensemble.hpp"
#include "brm/resolvent.hpp"

namespace brm {

enum class TracePath { automatic, banded, spectral };

struct EngineOptions {
  /// Worker threads; 0 selects the number of hardware threads.
  int threads = 0;
  /// automatic: per-replica eigenvalues when they are cheaper than one
  /// banded factorization per distinct z (wide bands), banded otherwise.
  TracePath path = TracePath::automatic;
};

int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on `threads` workers. Rethrows the first
/// exception after all workers have stopped.
void parallel_for(long count, int threads, const std::function<void(long)>& body);

/// Canonical text form of an ensemble config and its FNV-1a digest.
std::string canonical_config(const EnsembleConfig& c);
std::string config_digest(const EnsembleConfig& c);

/// R x |z| table of normalized traces; f[r * z.size() + k] = f(z_k) for
/// replica r. Every row comes from a single matrix.
struct TraceSamples {
  std::vector<cplx> z;
  long replicas = 0;
  std::vector<cplx> f;
  std::uint64_t base_seed = 0;
  std::string config_digest;
  TracePath path_used = TracePath::banded;

  cplx at(long r, std::size_t k) const { return f[static_cast<std::size_t>(r) * z.size() + k]; }
  std::vector<cplx> column(std::size_t k) const;
};

/// Picks the spectral or banded path for a config and number of distinct
/// (up to conjugation) spectral parameters.
TracePath choose_path(long N, int bandwidth, std::size_t distinct_z, TracePath requested);

TraceSamples trace_samples(const EnsembleConfig& config, std::span<const cplx> z, long replicas,
                           const EngineOptions& opt = {});
TraceSamples trace_samples_goe(long N, double v, std::uint64_t base_seed, std::span<const cplx> z,
                               long replicas, const EngineOptions& opt = {});
/// Traces of arbitrary matrices produced by make(r), e.g. degenerate tests.
TraceSamples trace_samples_custom(const std::function<BandMatrixSample(long)>& make,
                                  std::span<const cplx> z, long replicas,
                                  const EngineOptions& opt = {});

struct EstimatorResult {
  cplx mean;
  double stderr = 0.0;
  long replicas = 0;
  std::uint64_t base_seed = 0;
  std::string config_digest;
};

/// Unbiased sample covariance (1/(R-1)) sum (f1 - mean f1)(f2 - mean f2),
/// without conjugation, with a leave-one-out jackknife standard error.
/// Requires at least 16 replicas.
EstimatorResult correlation_estimate(std::span<const cplx> f1, std::span<const cplx> f2);
EstimatorResult correlation_estimate(const TraceSamples& s, std::size_t k1, std::size_t k2);

/// E|f - E f|^2 with jackknife standard error.
EstimatorResult variance_trace(std::span<const cplx> f);
EstimatorResult variance_trace(const TraceSamples& s, std::size_t k);

struct PointwiseResult {
  double sup_distance = 0.0;  // sup_{x in B_L} |mean G(x,x) - w(z)|
  double stderr = 0.0;        // jackknife
  long replicas = 0;
  IndexRange range;
  cplx w;
  /// Replica mean of G(x,x;z) for every x, 0-based.
  std::vector<cplx> mean_diagonal;
};

/// sup over the centred range of |g(x) - w|, g indexed 0-based with centre n.
double sup_distance(std::span<const cplx> g, long n, const IndexRange& range, cplx w);

PointwiseResult pointwise_diagonal_study(const EnsembleConfig& config, cplx z, double L,
                                         long replicas, const EngineOptions& opt = {});

struct ScalingFit {
  std::vector<std::pair<double, double>> points;  // (log x, log y)
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of log y on log x. Needs >= 4 points, y > 0.
ScalingFit scaling_fit(std::span<const std::pair<double, double>> points);

}  // namespace brm
