#include "brm/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "brm/errors.hpp"
#include "brm/quadrature.hpp"

namespace brm {

namespace {

using std::numbers::pi;

void require_positive_v(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("v must be positive");
}

cplx one_minus_vw2(cplx w, double v) { return 1.0 - v * w * w; }

}  // namespace

double StieltjesValue::residual() const { return std::abs(w * (-z - v * w) - 1.0); }

StieltjesValue stieltjes_w(cplx z, double v) {
  require_positive_v(v);
  if (z.imag() == 0.0) {
    throw DomainError("stieltjes_w requires Im z != 0; use boundary_w on the real axis");
  }
  // q solves q^2 + z q + v = 0; the sign is picked so that |q| is the larger
  // root and no cancellation occurs. The roots in w are q/v and 1/q.
  cplx sq = std::sqrt(z * z - 4.0 * v);
  if (std::real(std::conj(z) * sq) < 0.0) sq = -sq;
  const cplx q = -0.5 * (z + sq);
  const cplx wa = q / v;
  const cplx wb = 1.0 / q;
  const bool a_ok = wa.imag() * z.imag() >= 0.0;
  const bool b_ok = wb.imag() * z.imag() >= 0.0;
  cplx w;
  if (a_ok && b_ok) {
    w = std::abs(wa) < std::abs(wb) ? wa : wb;
  } else {
    w = b_ok ? wb : wa;
  }
  StieltjesValue out{z, w, v};
  // One Newton step, kept only if it helps and keeps the branch.
  const cplx step = (v * w * w + z * w + 1.0) / (2.0 * v * w + z);
  StieltjesValue polished{z, w - step, v};
  if (std::isfinite(std::abs(polished.w)) && polished.w.imag() * z.imag() >= 0.0 &&
      polished.residual() < out.residual()) {
    out = polished;
  }
  return out;
}

double semicircle_density(double lambda, double v) {
  require_positive_v(v);
  const double r = 4.0 * v - lambda * lambda;
  return r > 0.0 ? std::sqrt(r) / (2.0 * pi * v) : 0.0;
}

double semicircle_cdf(double lambda, double v) {
  require_positive_v(v);
  const double edge = 2.0 * std::sqrt(v);
  if (lambda <= -edge) return 0.0;
  if (lambda >= edge) return 1.0;
  const double r = std::sqrt(std::max(0.0, 4.0 * v - lambda * lambda));
  const double F = 0.5 + lambda * r / (4.0 * pi * v) + std::asin(lambda / edge) / pi;
  return std::clamp(F, 0.0, 1.0);
}

double semicircle_quantile(double p, double v) {
  require_positive_v(v);
  const double edge = 2.0 * std::sqrt(v);
  if (p <= 0.0) return -edge;
  if (p >= 1.0) return edge;
  double lo = -edge, hi = edge;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * edge; ++it) {
    const double mid = 0.5 * (lo + hi);
    (semicircle_cdf(mid, v) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EdgeValues boundary_w(double lambda, double v) {
  require_positive_v(v);
  if (!(std::abs(lambda) < 2.0 * std::sqrt(v))) {
    throw DomainError("boundary_w requires |lambda| < 2 sqrt(v)");
  }
  return {lambda, -lambda / (2.0 * v), std::sqrt(4.0 * v - lambda * lambda) / (2.0 * v)};
}

double lambda_eta(double v) { return 2.0 * std::sqrt(v) + 1.0; }

bool in_lambda_eta(cplx z, double v) { return std::abs(z.imag()) >= lambda_eta(v); }

double factor_identity_residual(cplx z1, cplx z2, double v) {
  const cplx w1 = stieltjes_w(z1, v).w;
  const cplx w2 = stieltjes_w(z2, v).w;
  if (w1 == w2) throw DomainError("factor identity undefined for w1 = w2");
  return std::abs((1.0 - v * w1 * w2) - w1 * w2 * (z1 - z2) / (w1 - w2));
}

double factor_identity_residual_unscaled(cplx z1, cplx z2, double v) {
  const cplx w1 = stieltjes_w(z1, v).w;
  const cplx w2 = stieltjes_w(z2, v).w;
  if (w1 == w2) throw DomainError("factor identity undefined for w1 = w2");
  return std::abs((1.0 - v * w1 * w2) - (z1 - z2) / (w1 - w2));
}

QValue q_integral_w(cplx w1, cplx w2, cplx one_minus_b, double v, const Profile& u) {
  require_positive_v(v);
  const cplx B = v * w1 * w2;
  const cplx eps = one_minus_b;
  const cplx A = w1 * w1 * w2 * w2;
  // u_F/(1 - B u_F)^2 = u_F + B u_F^2 (2 - B u_F)/(1 - B u_F)^2. The first
  // term integrates to 2 pi u(0) exactly; the remainder decays like u_F^2.
  auto integrand = [&](double p) -> cplx {
    const double f = u.fourier(p);
    const double x = u.one_minus_fourier(p);
    const cplx den = eps + B * x;
    return B * f * f * (2.0 - B * f) / (den * den);
  };

  // Location of the small-p peak, where |1 - B| ~ c1 p^nu.
  double nu = 2.0, c1 = 1.0;
  try {
    const auto m = u.small_p_constants();
    nu = m.nu;
    c1 = m.c1;
  } catch (const DomainError&) {
  }
  const double peak = std::pow(std::max(std::abs(eps), 1e-300) / c1, 1.0 / nu);

  std::vector<double> bp{0.0};
  double P = 0.0;
  cplx tail = 0.0;
  double tail_error = 0.0;
  if (u.kind() == ProfileKind::box) {
    // Panels aligned with the zeros of sin(sp/2); the remaining tail is
    // 2B\int_P^inf u_F^2 + O(P^-3), and \int_P^inf u_F^2 is known in closed form.
    const double s = u.param();
    const double h = 2.0 * pi / s;
    const int K = 4000;
    P = K * h;
    for (double t = peak / 4096.0; t < h; t *= 2.0) bp.push_back(t);
    for (int k = 1; k <= K; ++k) bp.push_back(k * h);
    const double y = 2.0 * pi * K;
    const double si_tail = 1.0 / y - 2.0 / (y * y * y);  // pi/2 - Si(y) at y = 2 pi K
    tail = 2.0 * B * (2.0 / s) * si_tail;
    tail_error = 3.0 * std::norm(B) * (2.0 / s) / (y * y);
  } else {
    // Cut where the envelope bound on the remainder 2|B| \int_P^inf env^2 is
    // negligible; env decays at least like 1/p^2.
    P = std::max(1.0, 64.0 * peak);
    auto bound = [&](double p) {
      const double e = u.fourier_envelope(p);
      return 2.0 * std::abs(B) * e * e * p / 3.0;
    };
    while (bound(P) > 1e-15) P *= 2.0;
    tail_error = bound(P);
    for (double t = peak / 4096.0; t < P; t *= 2.0) bp.push_back(t);
    if (u.kind() != ProfileKind::gaussian) {
      for (double t = 1.0; t < P; t *= 2.0) bp.push_back(t);
    }
    bp.push_back(P);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  while (!bp.empty() && bp.back() > P) bp.pop_back();
  if (bp.back() < P) bp.push_back(P);

  quad::Options opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-16;
  opt.max_intervals = 40000;
  auto r = quad::integrate<cplx>(integrand, std::span<const double>(bp), opt);
  const cplx body = r.value + tail;
  QValue out;
  out.value = A * u(0.0) + A / pi * body;
  out.error = std::abs(A) / pi * (r.error + tail_error);
  const double scale = std::max(std::abs(out.value), std::abs(A) * u(0.0));
  if (!(out.error <= 1e-8 * scale)) {
    throw NumericalError("Q integral did not converge (error estimate " +
                             std::to_string(out.error) + ")",
                         out.error);
  }
  return out;
}

cplx q_integral(cplx z1, cplx z2, double v, const Profile& u) {
  if (!in_lambda_eta(z1, v) || !in_lambda_eta(z2, v)) {
    throw DomainError("q_integral requires |Im z| >= 2 sqrt(v) + 1");
  }
  const cplx w1 = stieltjes_w(z1, v).w;
  const cplx w2 = stieltjes_w(z2, v).w;
  return q_integral_w(w1, w2, 1.0 - v * w1 * w2, v, u).value;
}

cplx s_leading(cplx z1, cplx z2, double v, const Profile& u) {
  const cplx w1 = stieltjes_w(z1, v).w;
  const cplx w2 = stieltjes_w(z2, v).w;
  const cplx Q = q_integral(z1, z2, v, u);
  return 2.0 * v * Q / (one_minus_vw2(w1, v) * one_minus_vw2(w2, v));
}

GoeEvaluation s_goe_paths(cplx z1, cplx z2, double v) {
  if (!in_lambda_eta(z1, v) || !in_lambda_eta(z2, v)) {
    throw DomainError("s_goe requires |Im z| >= 2 sqrt(v) + 1");
  }
  if (z1 == z2) throw DomainError("s_goe requires z1 != z2");
  const cplx w1 = stieltjes_w(z1, v).w;
  const cplx w2 = stieltjes_w(z2, v).w;
  const cplx outer = 2.0 * v / (one_minus_vw2(w1, v) * one_minus_vw2(w2, v));
  const cplx m = 1.0 - v * w1 * w2;
  const cplx ratio = (w1 - w2) / (z1 - z2);
  return {outer * (w1 * w1 * w2 * w2) / (m * m), outer * ratio * ratio};
}

cplx s_goe(cplx z1, cplx z2, double v) { return s_goe_paths(z1, z2, v).direct; }

cplx boundary_product(double lambda, double v) {
  const auto e = boundary_w(lambda, v);
  const cplx w1 = e.w();
  const cplx w2 = std::conj(w1);
  return one_minus_vw2(w1, v) * one_minus_vw2(w2, v);
}

double sigma_smoothed(double lambda1, double lambda2, double v, const Profile& u) {
  const double delta = lambda1 - lambda2;
  if (!(std::abs(delta) >= 1e-12)) throw DomainError("separation below 1e-12 is degenerate");
  const auto e1 = boundary_w(lambda1, v);
  const auto e2 = boundary_w(lambda2, v);
  const cplx w1 = e1.w();
  const cplx f1 = one_minus_vw2(w1, v);

  // Opposite signs: w(lambda2 - i0) = tau2 - i rho2. 1 - v w1 w2 is small
  // and is formed from w1 w2 (z1 - z2)/(w1 - w2) without cancellation.
  const cplx w2m(e2.tau, -e2.rho);
  const cplx diff(-(delta) / (2.0 * v), e1.rho + e2.rho);
  const cplx eps_opp = w1 * w2m * delta / diff;
  const cplx q_opp = q_integral_w(w1, w2m, eps_opp, v, u).value;
  const cplx s_opp = 2.0 * v * q_opp / (f1 * one_minus_vw2(w2m, v));

  // Equal signs: bounded remainder.
  const cplx w2p = e2.w();
  const cplx q_eq = q_integral_w(w1, w2p, 1.0 - v * w1 * w2p, v, u).value;
  const cplx s_eq = 2.0 * v * q_eq / (f1 * one_minus_vw2(w2p, v));

  // S(conj, conj) = conj S, so the four terms pair into real parts.
  return 0.5 * (s_opp.real() - s_eq.real());
}

double b_nu(double c1, double nu) {
  if (!(c1 > 0.0) || !(nu > 1.0)) throw DomainError("b_nu requires c1 > 0 and nu > 1");
  const double a = 2.0 * nu;
  // \int_0^inf (s^a - 1)/(1 + s^a)^2 ds, with s -> 1/s on [1, inf).
  auto inner = [a](double s) {
    const double sa = std::pow(s, a);
    return (sa - 1.0) / ((1.0 + sa) * (1.0 + sa));
  };
  auto outer = [a](double t) {
    if (t == 0.0) return 0.0;
    const double ta = std::pow(t, a);
    return std::pow(t, a - 2.0) * (1.0 - ta) / ((1.0 + ta) * (1.0 + ta));
  };
  quad::Options opt;
  opt.abs_tol = 1e-14;
  opt.rel_tol = 1e-13;
  const auto r1 = quad::integrate<double>(inner, 0.0, 1.0, opt);
  const auto r2 = quad::integrate<double>(outer, 0.0, 1.0, opt);
  if (r1.error + r2.error > 1e-11) {
    throw NumericalError("b_nu quadrature did not converge", r1.error + r2.error);
  }
  return (r1.value + r2.value) / (2.0 * pi * std::pow(c1, 1.0 / nu));
}

double b_2_closed_form(double u2) {
  if (!(u2 > 0.0)) throw DomainError("b_2_closed_form requires u2 > 0");
  return -std::tgamma(1.25) * std::tgamma(0.75) / (4.0 * pi * std::sqrt(u2));
}

LocalScaleResult sigma_asymptotic(double lambda, double delta, double v, const Profile& u,
                                  double N, double b) {
  if (!(delta > 0.0)) throw DomainError("sigma_asymptotic requires delta > 0");
  const auto m = u.small_p_constants();
  const auto e = boundary_w(lambda, v);
  const double nb = N * b;
  const double B = b_nu(m.c1, m.nu);
  const double power = std::pow(delta, -(2.0 - 1.0 / m.nu));
  LocalScaleResult out;
  out.lambda = lambda;
  out.delta = delta;
  out.nu = m.nu;
  out.c1 = m.c1;
  out.sigma_value = sigma_smoothed(lambda + 0.5 * delta, lambda - 0.5 * delta, v, u) / nb;
  out.asymptotic_value = 2.0 * B / std::pow(2.0 * v * e.rho, 1.0 / m.nu) * power / nb;
  out.asymptotic_unscaled = B / std::pow(2.0 * e.rho, 1.0 / m.nu) * power / nb;
  return out;
}

}  // namespace brm
