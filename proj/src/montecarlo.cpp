#include "brm/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "brm/digest.hpp"
#include "brm/errors.hpp"
#include "brm/theory.hpp"

namespace brm {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(long count, int threads, const std::function<void(long)>& body) {
  threads = std::max(1, std::min<int>(resolve_threads(threads), static_cast<int>(std::max(1L, count))));
  if (threads == 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (long i = next++; i < count && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string canonical_config(const EnsembleConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << c.n << ";b=" << c.b << ";v=" << c.v << ";profile=" << to_string(c.profile.kind())
     << ':' << c.profile.param() << ";seed=" << c.base_seed << ";truncation=" << c.truncation;
  return os.str();
}

std::string config_digest(const EnsembleConfig& c) { return fnv1a64_hex(canonical_config(c)); }

std::vector<cplx> TraceSamples::column(std::size_t k) const {
  std::vector<cplx> out(replicas);
  for (long r = 0; r < replicas; ++r) out[r] = at(r, k);
  return out;
}

TracePath choose_path(long N, int bandwidth, std::size_t distinct_z, TracePath requested) {
  if (requested == TracePath::spectral) {
    if (N > kDenseEigenCap) {
      throw DomainError("spectral path refused: N exceeds the dense cap of " +
                        std::to_string(kDenseEigenCap));
    }
    return TracePath::spectral;
  }
  if (requested == TracePath::banded || N > kDenseEigenCap) return TracePath::banded;
  // Measured costs per replica are close to N w^2 per distinct z for the
  // blocked band kernels and N^3 for the dense eigensolver (same units).
  const double nd = static_cast<double>(N), wd = static_cast<double>(bandwidth);
  const double banded = nd * wd * wd * static_cast<double>(std::max<std::size_t>(1, distinct_z));
  const double spectral = nd * nd * nd;
  return spectral < banded ? TracePath::spectral : TracePath::banded;
}

namespace {

// For each z_k: the earlier index it duplicates (or conjugates), or -1.
struct ZPlan {
  std::vector<long> source;
  std::vector<bool> conjugate;
  std::size_t distinct = 0;
};

ZPlan plan_z(std::span<const cplx> z) {
  ZPlan p;
  p.source.assign(z.size(), -1);
  p.conjugate.assign(z.size(), false);
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (z[k].imag() == 0.0) throw DomainError("trace_samples requires Im z != 0");
    for (std::size_t j = 0; j < k; ++j) {
      if (p.source[j] >= 0) continue;
      if (z[j] == z[k]) {
        p.source[k] = static_cast<long>(j);
        break;
      }
      if (z[j] == std::conj(z[k])) {
        p.source[k] = static_cast<long>(j);
        p.conjugate[k] = true;
        break;
      }
    }
    if (p.source[k] < 0) ++p.distinct;
  }
  return p;
}

void fill_row(const BandMatrixSample& H, std::span<const cplx> z, const ZPlan& plan,
              TracePath path, cplx* row) {
  if (path == TracePath::spectral) {
    const auto e = eigenvalues_dense(H);
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (plan.source[k] < 0) row[k] = normalized_trace(e.eigenvalues, z[k]);
    }
  } else {
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (plan.source[k] < 0) row[k] = normalized_trace(factorize(H, z[k]));
    }
  }
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (plan.source[k] >= 0) {
      const cplx s = row[plan.source[k]];
      row[k] = plan.conjugate[k] ? std::conj(s) : s;
    }
  }
}

TraceSamples run_traces(const std::function<BandMatrixSample(long)>& make, long N, int w,
                        std::span<const cplx> z, long replicas, const EngineOptions& opt) {
  if (replicas < 1) throw DomainError("at least one replica is required");
  TraceSamples out;
  out.z.assign(z.begin(), z.end());
  out.replicas = replicas;
  out.f.assign(static_cast<std::size_t>(replicas) * z.size(), cplx{});
  const ZPlan plan = plan_z(z);
  out.path_used = choose_path(N, w, plan.distinct, opt.path);
  parallel_for(replicas, opt.threads, [&](long r) {
    const BandMatrixSample H = make(r);
    fill_row(H, z, plan, out.path_used, out.f.data() + static_cast<std::size_t>(r) * z.size());
  });
  return out;
}

}  // namespace

TraceSamples trace_samples(const EnsembleConfig& config, std::span<const cplx> z, long replicas,
                           const EngineOptions& opt) {
  config.validate();
  auto out = run_traces([&](long r) { return sample(config, static_cast<std::uint64_t>(r)); },
                        config.N(), config.bandwidth(), z, replicas, opt);
  out.base_seed = config.base_seed;
  out.config_digest = config_digest(config);
  return out;
}

TraceSamples trace_samples_goe(long N, double v, std::uint64_t base_seed, std::span<const cplx> z,
                               long replicas, const EngineOptions& opt) {
  auto out = run_traces(
      [&](long r) { return sample_goe(N, v, base_seed, static_cast<std::uint64_t>(r)); }, N,
      static_cast<int>(N - 1), z, replicas, opt);
  out.base_seed = base_seed;
  std::ostringstream os;
  os.precision(17);
  os << "goe;N=" << N << ";v=" << v << ";seed=" << base_seed;
  out.config_digest = fnv1a64_hex(os.str());
  return out;
}

TraceSamples trace_samples_custom(const std::function<BandMatrixSample(long)>& make,
                                  std::span<const cplx> z, long replicas,
                                  const EngineOptions& opt) {
  const BandMatrixSample probe = make(0);
  return run_traces(make, probe.N(), probe.bandwidth(), z, replicas, opt);
}

EstimatorResult correlation_estimate(std::span<const cplx> f1, std::span<const cplx> f2) {
  const long R = static_cast<long>(f1.size());
  if (static_cast<long>(f2.size()) != R) throw DomainError("column lengths differ");
  if (R < 16) throw DomainError("correlation_estimate needs at least 16 replicas");
  // Shift by the first replica; covariances are shift invariant and the
  // sums stay well conditioned.
  const cplx o1 = f1[0], o2 = f2[0];
  cplx sa = 0.0, sb = 0.0, sab = 0.0;
  for (long i = 0; i < R; ++i) {
    const cplx a = f1[i] - o1, b = f2[i] - o2;
    sa += a;
    sb += b;
    sab += a * b;
  }
  const double Rd = static_cast<double>(R);
  EstimatorResult out;
  out.replicas = R;
  out.mean = (sab - sa * sb / Rd) / (Rd - 1.0);
  std::vector<cplx> loo(R);
  cplx loo_mean = 0.0;
  for (long i = 0; i < R; ++i) {
    const cplx a = f1[i] - o1, b = f2[i] - o2;
    loo[i] = (sab - a * b - (sa - a) * (sb - b) / (Rd - 1.0)) / (Rd - 2.0);
    loo_mean += loo[i];
  }
  loo_mean /= Rd;
  double ss = 0.0;
  for (long i = 0; i < R; ++i) ss += std::norm(loo[i] - loo_mean);
  out.stderr = std::sqrt((Rd - 1.0) / Rd * ss);
  return out;
}

EstimatorResult correlation_estimate(const TraceSamples& s, std::size_t k1, std::size_t k2) {
  const auto c1 = s.column(k1), c2 = s.column(k2);
  auto out = correlation_estimate(c1, c2);
  out.base_seed = s.base_seed;
  out.config_digest = s.config_digest;
  return out;
}

EstimatorResult variance_trace(std::span<const cplx> f) {
  const long R = static_cast<long>(f.size());
  if (R < 16) throw DomainError("variance_trace needs at least 16 replicas");
  const cplx o = f[0];
  cplx sa = 0.0;
  double saa = 0.0;
  for (long i = 0; i < R; ++i) {
    const cplx a = f[i] - o;
    sa += a;
    saa += std::norm(a);
  }
  const double Rd = static_cast<double>(R);
  EstimatorResult out;
  out.replicas = R;
  out.mean = (saa - std::norm(sa) / Rd) / (Rd - 1.0);
  std::vector<double> loo(R);
  double loo_mean = 0.0;
  for (long i = 0; i < R; ++i) {
    const cplx a = f[i] - o;
    loo[i] = (saa - std::norm(a) - std::norm(sa - a) / (Rd - 1.0)) / (Rd - 2.0);
    loo_mean += loo[i];
  }
  loo_mean /= Rd;
  double ss = 0.0;
  for (long i = 0; i < R; ++i) ss += (loo[i] - loo_mean) * (loo[i] - loo_mean);
  out.stderr = std::sqrt((Rd - 1.0) / Rd * ss);
  return out;
}

EstimatorResult variance_trace(const TraceSamples& s, std::size_t k) {
  auto out = variance_trace(s.column(k));
  out.base_seed = s.base_seed;
  out.config_digest = s.config_digest;
  return out;
}

double sup_distance(std::span<const cplx> g, long n, const IndexRange& range, cplx w) {
  double m = 0.0;
  for (long x = range.first; x <= range.last; ++x) m = std::max(m, std::abs(g[x + n] - w));
  return m;
}

PointwiseResult pointwise_diagonal_study(const EnsembleConfig& config, cplx z, double L,
                                         long replicas, const EngineOptions& opt) {
  config.validate();
  if (replicas < 2) throw DomainError("pointwise study needs at least 2 replicas");
  const IndexRange range = boundary_set(config.n, config.b, L);
  const long N = config.N();
  std::vector<cplx> diag(static_cast<std::size_t>(replicas) * N);
  parallel_for(replicas, opt.threads, [&](long r) {
    const auto H = sample(config, static_cast<std::uint64_t>(r));
    const auto g = opt.path == TracePath::spectral ? resolvent_diagonal_dense(H, z)
                                                   : resolvent_diagonal(factorize(H, z));
    std::copy(g.begin(), g.end(), diag.begin() + static_cast<std::size_t>(r) * N);
  });
  PointwiseResult out;
  out.replicas = replicas;
  out.range = range;
  out.w = stieltjes_w(z, config.v).w;
  std::vector<cplx> sum(N, 0.0);
  for (long r = 0; r < replicas; ++r)
    for (long x = 0; x < N; ++x) sum[x] += diag[static_cast<std::size_t>(r) * N + x];
  const double Rd = static_cast<double>(replicas);
  out.mean_diagonal.resize(N);
  for (long x = 0; x < N; ++x) out.mean_diagonal[x] = sum[x] / Rd;
  out.sup_distance = sup_distance(out.mean_diagonal, config.n, range, out.w);
  std::vector<double> loo(replicas);
  std::vector<cplx> g(N);
  double loo_mean = 0.0;
  for (long r = 0; r < replicas; ++r) {
    for (long x = 0; x < N; ++x) g[x] = (sum[x] - diag[static_cast<std::size_t>(r) * N + x]) / (Rd - 1.0);
    loo[r] = sup_distance(g, config.n, range, out.w);
    loo_mean += loo[r];
  }
  loo_mean /= Rd;
  double ss = 0.0;
  for (double s : loo) ss += (s - loo_mean) * (s - loo_mean);
  out.stderr = std::sqrt((Rd - 1.0) / Rd * ss);
  return out;
}

ScalingFit scaling_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 4) throw DomainError("scaling_fit needs at least 4 points");
  ScalingFit fit;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("scaling_fit needs positive abscissae and ordinates");
    fit.points.emplace_back(std::log(x), std::log(y));
  }
  const double n = static_cast<double>(fit.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [lx, ly] : fit.points) {
    mx += lx;
    my += ly;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [lx, ly] : fit.points) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (const auto& [lx, ly] : fit.points) {
    const double r = ly - (fit.intercept + fit.slope * lx);
    rss += r * r;
  }
  fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

}  // namespace brm
