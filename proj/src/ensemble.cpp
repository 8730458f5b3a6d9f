#include "brm/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "brm/errors.hpp"
#include "brm/rng.hpp"

namespace brm {

int EnsembleConfig::bandwidth() const {
  const long cap = N() - 1;
  if (profile.kind() == ProfileKind::box) {
    const double half = 0.5 * profile.param() * b;
    return static_cast<int>(std::min<long>(cap, static_cast<long>(std::ceil(half))));
  }
  const double threshold = truncation * profile.sup();
  auto dropped = [&](long k) { return profile(static_cast<double>(k) / b) <= threshold; };
  if (!dropped(cap + 1)) return static_cast<int>(cap);
  // Smallest dropped offset; u is nonincreasing so bisection applies.
  long lo = 0, hi = cap + 1;  // !dropped(lo) since u(0) = sup > threshold
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (dropped(mid) ? hi : lo) = mid;
  }
  return static_cast<int>(hi - 1);
}

double EnsembleConfig::chi() const {
  if (n < 2 || b <= 0.0) return 0.0;
  return std::log(b) / std::log(static_cast<double>(n));
}

bool EnsembleConfig::in_recommended_regime() const {
  const double c = chi();
  return c > 1.0 / 3.0 && c < 1.0;
}

void EnsembleConfig::validate() const {
  if (n < 1) throw ConfigError("n must be positive");
  if (!(b >= 1.0)) throw ConfigError("b must be at least 1");
  if (b > static_cast<double>(N())) throw ConfigError("b exceeds N");
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("v must be positive");
  if (!(truncation > 0.0 && truncation < 1.0)) throw ConfigError("truncation must lie in (0, 1)");
  if (N() > 0x7fffffffL) throw ConfigError("N too large");
}

BandMatrixSample::BandMatrixSample(long N, int w, double v, std::uint64_t replica,
                                   std::optional<EnsembleConfig> config)
    : N_(N), w_(w), v_(v), replica_(replica), config_(std::move(config)),
      band_(static_cast<std::size_t>(N) * (w + 1), 0.0) {
  if (N < 1 || w < 0 || w > N - 1) throw DomainError("invalid band matrix shape");
}

double BandMatrixSample::operator()(long i, long j) const {
  if (i < j) std::swap(i, j);
  if (j < 0 || i >= N_ || i - j > w_) return 0.0;
  return lower(j, static_cast<int>(i - j));
}

double BandMatrixSample::trace() const {
  double s = 0.0;
  for (long j = 0; j < N_; ++j) s += lower(j, 0);
  return s;
}

double BandMatrixSample::frobenius_squared() const {
  double s = 0.0;
  for (long j = 0; j < N_; ++j) {
    const int m = static_cast<int>(std::min<long>(w_, N_ - 1 - j));
    s += lower(j, 0) * lower(j, 0);
    for (int k = 1; k <= m; ++k) s += 2.0 * lower(j, k) * lower(j, k);
  }
  return s;
}

double BandMatrixSample::row_sum_norm() const {
  std::vector<double> rows(N_, 0.0);
  for (long j = 0; j < N_; ++j) {
    const int m = static_cast<int>(std::min<long>(w_, N_ - 1 - j));
    rows[j] += std::abs(lower(j, 0));
    for (int k = 1; k <= m; ++k) {
      rows[j] += std::abs(lower(j, k));
      rows[j + k] += std::abs(lower(j, k));
    }
  }
  return *std::max_element(rows.begin(), rows.end());
}

double BandMatrixSample::max_abs() const {
  double m = 0.0;
  for (double x : band_) m = std::max(m, std::abs(x));
  return m;
}

void BandMatrixSample::write_triplets(std::ostream& os) const {
  const long shift = config_ ? config_->n : 0;
  const auto old_precision = os.precision(17);
  for (long j = 0; j < N_; ++j) {
    const int m = static_cast<int>(std::min<long>(w_, N_ - 1 - j));
    for (int k = 0; k <= m; ++k) {
      os << (j + k - shift) << ' ' << (j - shift) << ' ' << lower(j, k) << '\n';
    }
  }
  os.precision(old_precision);
}

double variance_entry(long x, long y, const EnsembleConfig& config) {
  return config.profile(static_cast<double>(x - y) / config.b) / config.b;
}

BandMatrixSample sample(const EnsembleConfig& config, std::uint64_t replica_index) {
  config.validate();
  const long N = config.N();
  const int w = config.bandwidth();
  BandMatrixSample H(N, w, config.v, replica_index, config);
  // Standard deviation of H(j+k, j) depends on the offset only.
  std::vector<double> scale(w + 1);
  for (int k = 0; k <= w; ++k) {
    const double diag = k == 0 ? 2.0 : 1.0;
    scale[k] = std::sqrt(config.v * diag * variance_entry(k, 0, config));
  }
  const rng::Key key = rng::key_from_seed(config.base_seed);
  for (long j = 0; j < N; ++j) {
    const int m = static_cast<int>(std::min<long>(w, N - 1 - j));
    const long y = j - config.n;
    for (int k = 0; k <= m; ++k) {
      if (scale[k] == 0.0) continue;
      H.lower(j, k) = scale[k] * rng::keyed_normal(key, replica_index, y, y + k);
    }
  }
  return H;
}

BandMatrixSample sample_goe(long N, double v, std::uint64_t base_seed,
                            std::uint64_t replica_index) {
  if (N < 1) throw DomainError("GOE size must be positive");
  if (!(v > 0.0)) throw DomainError("v must be positive");
  const int w = static_cast<int>(N - 1);
  BandMatrixSample A(N, w, v, replica_index);
  rng::Key key = rng::key_from_seed(base_seed);
  key[0] ^= 0x676f6521u;  // separate stream from the band ensemble
  key[1] ^= 0x1b873593u;
  const double off = std::sqrt(v / static_cast<double>(N));
  const double diag = std::sqrt(2.0 * v / static_cast<double>(N));
  for (long j = 0; j < N; ++j) {
    for (long i = j; i < N; ++i) {
      A.lower(j, static_cast<int>(i - j)) =
          (i == j ? diag : off) * rng::keyed_normal(key, replica_index, j, i);
    }
  }
  return A;
}

}  // namespace brm
