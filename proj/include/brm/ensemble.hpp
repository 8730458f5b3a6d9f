#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "brm/profiles.hpp"

namespace brm {

/// Parameters of the band ensemble. Indices run over x = -n..n, N = 2n+1.
struct EnsembleConfig {
  long n = 1;
  double b = 1.0;
  double v = 1.0;
  Profile profile = Profile::box();
  std::uint64_t base_seed = 0;
  /// Offsets whose profile value falls to truncation * sup(u) are dropped.
  double truncation = 1e-12;

  long N() const { return 2 * n + 1; }
  /// Number of stored off-diagonals.
  int bandwidth() const;
  /// log b / log n.
  double chi() const;
  /// True when b = n^chi with chi in (1/3, 1).
  bool in_recommended_regime() const;
  /// Throws ConfigError with a single-line reason ("b exceeds N", ...).
  void validate() const;
};

/// One realization of a real symmetric band matrix, 0-based indices
/// i = x + n. The lower band is stored column by column:
/// band[j * (w+1) + k] = H(j+k, j) for 0 <= k <= w. Rows past N-1 hold zero.
class BandMatrixSample {
 public:
  BandMatrixSample(long N, int w, double v, std::uint64_t replica,
                   std::optional<EnsembleConfig> config = std::nullopt);

  long N() const { return N_; }
  int bandwidth() const { return w_; }
  int ld() const { return w_ + 1; }
  double v() const { return v_; }
  std::uint64_t replica_index() const { return replica_; }
  const std::optional<EnsembleConfig>& config() const { return config_; }

  /// H(i, j) with 0-based indices; zero outside the band.
  double operator()(long i, long j) const;
  /// Mutable lower-band element H(j+k, j); no bounds checks.
  double& lower(long j, int k) { return band_[static_cast<std::size_t>(j) * (w_ + 1) + k]; }
  double lower(long j, int k) const { return band_[static_cast<std::size_t>(j) * (w_ + 1) + k]; }
  const std::vector<double>& band() const { return band_; }
  std::vector<double>& band() { return band_; }

  double trace() const;
  /// sum_{x,y} H(x,y)^2.
  double frobenius_squared() const;
  /// max_x sum_y |H(x,y)|.
  double row_sum_norm() const;
  double max_abs() const;

  /// Lower-triangle triplets `x y value`, centred indices, one per line.
  void write_triplets(std::ostream& os) const;

 private:
  long N_;
  int w_;
  double v_;
  std::uint64_t replica_;
  std::optional<EnsembleConfig> config_;
  std::vector<double> band_;
};

/// U(x, y) = u((x - y)/b) / b.
double variance_entry(long x, long y, const EnsembleConfig& config);

/// H(x,y) = a(x,y) sqrt(U(x,y)), Var a(x,y) = v (1 + delta_xy).
BandMatrixSample sample(const EnsembleConfig& config, std::uint64_t replica_index);

/// Dense GOE reference A = a / sqrt(N), Var a(x,y) = v(1 + delta_xy), stored
/// with full bandwidth N - 1.
BandMatrixSample sample_goe(long N, double v, std::uint64_t base_seed,
                            std::uint64_t replica_index);

}  // namespace brm
