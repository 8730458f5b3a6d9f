#pragma once

// Adaptive Gauss-Kronrod integration and an oscillatory cosine-tail
// integrator with epsilon-algorithm acceleration. Integrands may be real or
// complex valued.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

namespace brm::quad {

struct Options {
  double abs_tol = 1e-13;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
};

template <class T>
struct Result {
  T value{};
  double error = 0.0;
  long evaluations = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule on [-1, 1].
// Index 10 is the centre; odd indices are the Gauss nodes.
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600997333776, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& x) { return std::abs(x); }

template <class T>
struct Panel {
  double a, b;
  T value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class T, class F>
Panel<T> kronrod21(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  T fc = f(centre);
  T kronrod = fc * kKronrodWeights[10];
  T gauss{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    T sum = f(centre - dx) + f(centre + dx);
    kronrod += sum * kKronrodWeights[j];
    if (j % 2 == 1) gauss += sum * kGaussWeights[j / 2];
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, magnitude(kronrod - gauss)};
}

}  // namespace detail

/// Nodes of the 21-point rule on [-1,1], exposed for rule-exactness tests.
inline std::array<double, 21> kronrod21_nodes() {
  std::array<double, 21> x{};
  for (int j = 0; j < 10; ++j) {
    x[j] = -detail::kKronrodNodes[j];
    x[20 - j] = detail::kKronrodNodes[j];
  }
  x[10] = 0.0;
  return x;
}

/// Applies the 21-point Kronrod rule and its embedded 10-point Gauss rule to
/// [a, b] once. Returns {kronrod, gauss}.
template <class T, class F>
std::array<T, 2> kronrod_gauss_pair(F&& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  T kronrod = f(centre) * detail::kKronrodWeights[10];
  T gauss{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * detail::kKronrodNodes[j];
    T sum = f(centre - dx) + f(centre + dx);
    kronrod += sum * detail::kKronrodWeights[j];
    if (j % 2 == 1) gauss += sum * detail::kGaussWeights[j / 2];
  }
  return {kronrod * half, gauss * half};
}

/// Globally adaptive integration over the panels delimited by `breakpoints`
/// (sorted, at least two entries). The panel with the largest error
/// estimate is bisected until the total error estimate meets the tolerance.
template <class T, class F>
Result<T> integrate(F&& f, std::span<const double> breakpoints,
                    const Options& opt = {}) {
  Result<T> out;
  std::priority_queue<detail::Panel<T>> heap;
  std::vector<detail::Panel<T>> done;
  T total{};
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i + 1] > breakpoints[i])) continue;
    auto p = detail::kronrod21<T>(f, breakpoints[i], breakpoints[i + 1]);
    out.evaluations += 21;
    total += p.value;
    total_error += p.error;
    heap.push(p);
  }
  int intervals = static_cast<int>(heap.size());
  auto tolerance = [&] {
    return std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total));
  };
  while (!heap.empty() && total_error > tolerance() &&
         intervals < opt.max_intervals) {
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval cannot be split further in floating point.
      done.push_back(worst);
      continue;
    }
    auto left = detail::kronrod21<T>(f, worst.a, mid);
    auto right = detail::kronrod21<T>(f, mid, worst.b);
    out.evaluations += 42;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Resum in left-to-right order so the value does not carry the
  // accumulated cancellation of the running total.
  while (!heap.empty()) {
    done.push_back(heap.top());
    heap.pop();
  }
  std::sort(done.begin(), done.end(),
            [](const auto& x, const auto& y) { return x.a < y.a; });
  T value{};
  double error = 0.0;
  for (const auto& p : done) {
    value += p.value;
    error += p.error;
  }
  out.value = value;
  out.error = error;
  out.converged = error <= std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(value));
  return out;
}

template <class T, class F>
Result<T> integrate(F&& f, double a, double b, const Options& opt = {}) {
  const std::array<double, 2> bp{a, b};
  return integrate<T>(std::forward<F>(f), std::span<const double>(bp), opt);
}

/// Epsilon-algorithm limit of a sequence of partial sums. Returns the
/// extrapolated value and the difference between the last two estimates.
template <class T>
std::pair<T, double> wynn_epsilon(std::span<const T> sums) {
  const std::size_t n = sums.size();
  if (n < 3) return {sums.back(), std::numeric_limits<double>::infinity()};
  // prev = column k-1, cur = column k.
  std::vector<T> prev(n + 1, T{}), cur(sums.begin(), sums.end());
  T best = sums.back();
  T best_prev = sums[n - 2];
  for (std::size_t k = 1; cur.size() > 1; ++k) {
    std::vector<T> next(cur.size() - 1);
    bool stalled = false;
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      T diff = cur[i + 1] - cur[i];
      if (detail::magnitude(diff) == 0.0) {
        stalled = true;
        break;
      }
      next[i] = prev[i + 1] + T(1.0) / diff;
    }
    if (stalled) break;
    prev = std::move(cur);
    cur = std::move(next);
    if (k % 2 == 0) {
      best_prev = cur.size() >= 2 ? cur[cur.size() - 2] : best;
      best = cur.back();
      if (cur.size() < 2) break;
    }
  }
  return {best, detail::magnitude(best - best_prev)};
}

/// \f$\int_T^\infty g(t)\cos(\omega t)\,dt\f$ for smooth g decaying to zero.
/// The range is cut at consecutive zeros of the cosine; the alternating
/// sequence of partial sums is accelerated with the epsilon algorithm.
template <class F>
Result<double> cosine_tail(F&& g, double omega, double start,
                           const Options& opt = {}, int max_panels = 400) {
  Result<double> out;
  const double half_period = std::numbers::pi / omega;
  auto integrand = [&](double t) { return g(t) * std::cos(omega * t); };
  // First zero of cos(omega t) at or after `start`.
  const double k0 = std::ceil(start / half_period - 0.5);
  double t0 = (k0 + 0.5) * half_period;
  std::vector<double> sums;
  double running = 0.0;
  Options panel_opt = opt;
  panel_opt.rel_tol = std::max(opt.rel_tol, 1e-14);
  if (t0 > start) {
    auto r = integrate<double>(integrand, start, t0, panel_opt);
    out.evaluations += r.evaluations;
    running += r.value;
  }
  sums.push_back(running);
  double previous_estimate = running;
  int stable = 0;
  for (int k = 0; k < max_panels; ++k) {
    const double a = t0 + k * half_period;
    auto r = integrate<double>(integrand, a, a + half_period, panel_opt);
    out.evaluations += r.evaluations;
    running += r.value;
    sums.push_back(running);
    const std::size_t window = std::min<std::size_t>(sums.size(), 40);
    auto [estimate, spread] = wynn_epsilon<double>(
        std::span<const double>(sums.data() + sums.size() - window, window));
    const double change = std::abs(estimate - previous_estimate);
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(estimate));
    out.value = estimate;
    out.error = std::max(change, spread);
    previous_estimate = estimate;
    if (k >= 6 && out.error <= tol) {
      if (++stable >= 2) {
        out.converged = true;
        return out;
      }
    } else {
      stable = 0;
    }
    // Terms themselves negligible: the series has effectively converged.
    if (k >= 6 && std::abs(r.value) <= 0.1 * tol) {
      out.value = running;
      out.error = std::abs(r.value);
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace brm::quad
