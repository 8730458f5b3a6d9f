#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "brm/errors.hpp"
#include "brm/theory.hpp"

using namespace brm;
using std::numbers::pi;

namespace {

// Random point with |Im z| in [eta, eta + 5] and either sign.
cplx random_lambda_eta(std::mt19937_64& g, double v) {
  std::uniform_real_distribution<double> re(-6.0, 6.0), im(0.0, 5.0);
  std::bernoulli_distribution sign;
  const double y = lambda_eta(v) + im(g);
  return {re(g), sign(g) ? y : -y};
}

// (1/2pi) \int_R u_F(p)^m dp = m-fold self-convolution of u at 0.
double box_convolution_at_zero(int m) {
  // Irwin-Hall density of a sum of m uniforms on (-1/2, 1/2) at 0.
  long double s = 0.0L, binom = 1.0L, fact = 1.0L;
  for (int k = 1; k < m; ++k) fact *= k;
  for (int k = 0; k <= m; ++k) {
    const long double x = 0.5L * m - k;
    if (x > 0) s += ((k % 2) ? -1.0L : 1.0L) * binom * std::pow(x, m - 1);
    binom = binom * (m - k) / (k + 1);
  }
  return static_cast<double>(s / fact);
}

double exponential_convolution_at_zero(int m) {
  // (1/2pi) \int (1 + p^2)^{-m} dp
  return std::exp(std::lgamma(m - 0.5) - std::lgamma(static_cast<double>(m))) /
         (2.0 * std::sqrt(pi));
}

// Q = A sum_k (k+1) B^k K(k+1), from u_F/(1 - B u_F)^2 = sum (k+1) B^k u_F^{k+1}.
template <class K>
cplx q_series(cplx z1, cplx z2, double v, K conv) {
  const cplx w1 = stieltjes_w(z1, v).w, w2 = stieltjes_w(z2, v).w;
  const cplx B = v * w1 * w2;
  cplx sum = 0.0, Bk = 1.0;
  for (int k = 0; k < 60; ++k) {
    sum += static_cast<double>(k + 1) * Bk * conv(k + 1);
    Bk *= B;
  }
  return w1 * w1 * w2 * w2 * sum;
}

}  // namespace

TEST_CASE("Stieltjes transform examples") {
  const auto s = stieltjes_w(cplx(0, 1), 1.0);
  CHECK(std::abs(s.w - cplx(0, (std::sqrt(5.0) - 1) / 2)) < 1e-15);
  const auto t = stieltjes_w(cplx(0, 3), 1.0);
  CHECK(std::abs(t.w.real()) < 1e-15);
  CHECK(std::abs(t.w) <= 1.0 / 3.0);
  const cplx z(0.7, 0.4);
  CHECK(std::abs(stieltjes_w(std::conj(z), 1.3).w - std::conj(stieltjes_w(z, 1.3).w)) < 1e-15);
  CHECK_THROWS_AS(stieltjes_w(cplx(1.0, 0.0), 1.0), DomainError);
}

TEST_CASE("Stieltjes residual and branch on a 1e4-point grid") {
  double worst = 0.0;
  int count = 0;
  for (double v : {0.5, 1.0, 2.0}) {
    const double edge = 2.0 * std::sqrt(v);
    for (int i = 0; i < 60; ++i) {
      const double x = -3.0 * edge + 6.0 * edge * i / 59.0;
      for (int j = 0; j < 28; ++j) {
        const double y = std::pow(10.0, -4.0 + 5.0 * j / 27.0);  // 1e-4 .. 10
        for (double sgn : {1.0, -1.0}) {
          const auto s = stieltjes_w(cplx(x, sgn * y), v);
          worst = std::max(worst, s.residual());
          CHECK(s.w.imag() * s.z.imag() >= 0.0);
          ++count;
        }
      }
    }
  }
  CHECK(count >= 10000);
  CHECK(worst <= 1e-12);
}

TEST_CASE("semicircle density and distribution") {
  CHECK(semicircle_density(0.0, 1.0) == doctest::Approx(1.0 / pi).epsilon(1e-15));
  CHECK(semicircle_density(2.0, 1.0) == 0.0);
  CHECK(semicircle_density(-2.0, 1.0) == 0.0);
  for (double v : {0.5, 1.0, 2.0}) {
    // Simpson's rule after lambda = 2 sqrt(v) sin(theta), which removes the
    // square-root endpoints and leaves a smooth periodic integrand.
    const int M = 2000;
    const double r = 2.0 * std::sqrt(v);
    auto f = [&](double th) { return semicircle_density(r * std::sin(th), v) * r * std::cos(th); };
    double s = f(-pi / 2) + f(pi / 2);
    for (int k = 1; k < M; ++k) s += (k % 2 ? 4.0 : 2.0) * f(-pi / 2 + pi * k / M);
    CHECK(std::abs(s * (pi / M) / 3.0 - 1.0) < 1e-10);
    CHECK(semicircle_cdf(0.0, v) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(semicircle_cdf(r, v) == 1.0);
    const double h = 1e-6, x = 0.37 * r;
    CHECK((semicircle_cdf(x + h, v) - semicircle_cdf(x - h, v)) / (2 * h) ==
          doctest::Approx(semicircle_density(x, v)).epsilon(1e-8));
    CHECK(semicircle_cdf(semicircle_quantile(0.3, v), v) == doctest::Approx(0.3).epsilon(1e-12));
  }
}

TEST_CASE("boundary values") {
  auto e = boundary_w(0.0, 1.0);
  CHECK(e.tau == 0.0);
  CHECK(e.rho == 1.0);
  e = boundary_w(1.0, 1.0);
  CHECK(e.tau == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(e.rho == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-15));
  CHECK(std::abs(stieltjes_w(cplx(1.0, 1e-8), 1.0).w - e.w()) < 1e-4);
  CHECK(e.rho == doctest::Approx(pi * semicircle_density(1.0, 1.0)).epsilon(1e-14));
  for (double v : {0.5, 2.0}) {
    const auto b = boundary_w(0.8, v);
    CHECK(b.tau * b.tau == doctest::Approx(0.64 / (4 * v * v)).epsilon(1e-14));
    CHECK(b.rho * b.rho == doctest::Approx((4 * v - 0.64) / (4 * v * v)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(boundary_w(2.0, 1.0), DomainError);
}

TEST_CASE("factor identity") {
  CHECK(factor_identity_residual(cplx(0, 3), cplx(0, -3), 1.0) <= 1e-12);
  CHECK(factor_identity_residual(cplx(0.4, 3.2), cplx(0.4, -3.2), 1.0) <= 1e-12);
  std::mt19937_64 g(17);
  for (int i = 0; i < 100; ++i) {
    const cplx z1 = random_lambda_eta(g, 1.0), z2 = random_lambda_eta(g, 1.0);
    CHECK(factor_identity_residual(z1, z2, 1.0) <= 1e-11);
  }
  // Without the w1 w2 factor the relation does not hold.
  CHECK(factor_identity_residual_unscaled(cplx(0, 3), cplx(0, -3), 1.0) > 1.0);
  CHECK_THROWS_AS(factor_identity_residual(cplx(0, 3), cplx(0, 3), 1.0), DomainError);
}

TEST_CASE("limit consistency and boundary product") {
  const double v = 1.0, lambda = 0.3, eps = 1e-6;
  const double l1 = lambda + 5e-4, l2 = lambda - 5e-4;
  const cplx w1 = stieltjes_w(cplx(l1, eps), v).w, w2 = stieltjes_w(cplx(l2, -eps), v).w;
  const double rho = boundary_w(lambda, v).rho;
  CHECK(std::abs(1.0 - v * w1 * w2 - (l1 - l2) / (cplx(0, 2) * rho)) < 1e-4);
  for (double vv : {0.5, 1.0, 2.0}) {
    for (double l : {0.0, 0.4, -1.1}) {
      const double r = boundary_w(l, vv).rho;
      CHECK(std::abs(boundary_product(l, vv) - 4.0 * vv * r * r) <= 1e-10);
    }
  }
}

TEST_CASE("Q integral against the convolution series") {
  const double v = 1.0;
  std::vector<std::pair<cplx, cplx>> pairs = {
      {cplx(0, 3.2), cplx(0, -3.2)}, {cplx(0.4, 3.2), cplx(0.4, -3.2)},
      {cplx(-2.0, 3.0), cplx(1.0, 4.5)}, {cplx(0.0, 3.1), cplx(0.0, 3.1)}};
  for (const auto& [z1, z2] : pairs) {
    const cplx qe = q_integral(z1, z2, v, Profile::exponential());
    const cplx se = q_series(z1, z2, v, exponential_convolution_at_zero);
    CHECK(std::abs(qe - se) <= 1e-10 * std::abs(se));
    const cplx qb = q_integral(z1, z2, v, Profile::box());
    const cplx sb = q_series(z1, z2, v, box_convolution_at_zero);
    CHECK(std::abs(qb - sb) <= 1e-10 * std::abs(sb));
  }
}

TEST_CASE("Q integral against a second quadrature rule") {
  // Double-exponential quadrature of the raw integrand, no subtraction.
  boost::math::quadrature::exp_sinh<double> es;
  for (const auto& u : {Profile::exponential(), Profile::gaussian(), Profile::power_law(1.5)}) {
    CAPTURE(u.describe());
    const cplx z1(0.4, 3.2), z2(0.4, -3.2);
    const double v = 1.0;
    const cplx w1 = stieltjes_w(z1, v).w, w2 = stieltjes_w(z2, v).w;
    const cplx B = v * w1 * w2, A = w1 * w1 * w2 * w2;
    auto part = [&](bool imag) {
      return es.integrate(
          [&](double p) {
            const double f = u.fourier(p);
            const cplx val = A * f / ((1.0 - B * f) * (1.0 - B * f));
            return imag ? val.imag() : val.real();
          },
          0.0, std::numeric_limits<double>::infinity(), 1e-12);
    };
    const cplx oracle = cplx(part(false), part(true)) / pi;
    CHECK(std::abs(q_integral(z1, z2, v, u) - oracle) <= 1e-8);
  }
}

TEST_CASE("Q and S symmetries") {
  const double v = 1.0;
  const auto u = Profile::exponential();
  const cplx z1(0.4, 3.2), z2(-1.0, -4.0);
  CHECK(std::abs(q_integral(z1, z2, v, u) - q_integral(z2, z1, v, u)) < 1e-15);
  CHECK(std::abs(std::conj(q_integral(z1, z2, v, u)) -
                 q_integral(std::conj(z1), std::conj(z2), v, u)) < 1e-15);
  CHECK(std::abs(s_leading(z1, z2, v, u) - s_leading(z2, z1, v, u)) < 1e-15);
  CHECK(std::abs(std::conj(s_leading(z1, z2, v, u)) -
                 s_leading(std::conj(z1), std::conj(z2), v, u)) < 1e-15);
  CHECK_THROWS_AS(q_integral(cplx(0, 1), z2, v, u), DomainError);
}

TEST_CASE("GOE correlation") {
  std::mt19937_64 g(5);
  for (int i = 0; i < 100; ++i) {
    const cplx z1 = random_lambda_eta(g, 1.0), z2 = random_lambda_eta(g, 1.0);
    const auto s = s_goe_paths(z1, z2, 1.0);
    CHECK(std::abs(s.direct - s.via_ratio) <= 1e-10 * std::abs(s.direct));
  }
  const cplx z1(0.4, 3.2), z2(1.0, -3.5);
  CHECK(std::abs(std::conj(s_goe(z1, z2, 1.0)) - s_goe(std::conj(z1), std::conj(z2), 1.0)) < 1e-15);

  // Local limit: S_GOE(lambda + r1/N + i eps, lambda + r2/N - i eps)/N^2 at
  // eps -> 0 (Richardson in eps) approaches -2/(r1 - r2)^2.
  const double v = 1.0, lambda = 0.3, N = 1e4;
  for (double r : {1.0, 2.5}) {
    auto at = [&](double eps) {
      const cplx a(lambda + r / N, eps), b(lambda, -eps);
      const cplx w1 = stieltjes_w(a, v).w, w2 = stieltjes_w(b, v).w;
      const cplx ratio = (w1 - w2) / (a - b);
      return (2.0 * v * ratio * ratio / ((1.0 - v * w1 * w1) * (1.0 - v * w2 * w2))).real() /
             (N * N);
    };
    const double e = 1e-9;
    const double limit = 2.0 * at(e) - at(2.0 * e);
    CHECK(limit == doctest::Approx(-2.0 / (r * r)).epsilon(1e-3));
  }
}

TEST_CASE("B_nu constants") {
  CHECK(std::abs(b_nu(1.0, 2.0) + 1.0 / (8.0 * std::sqrt(2.0))) <= 1e-10);
  for (double nu : {1.2, 1.5, 2.0, 3.0}) {
    const double a = 2.0 * nu;
    const double J = (pi / a) / std::sin(pi / a) * (2.0 / a - 1.0);
    CHECK(std::abs(b_nu(1.0, nu) - J / (2.0 * pi)) <= 1e-10);
    CHECK(b_nu(3.7, nu) == doctest::Approx(b_nu(1.0, nu) / std::pow(3.7, 1.0 / nu)).epsilon(1e-12));
    CHECK(b_nu(1.0, nu) < 0.0);
  }
  CHECK(std::abs(b_2_closed_form(1.0) + 1.110721 / (4 * pi)) < 1e-7);
  CHECK(std::abs(std::tgamma(1.25) * std::tgamma(0.75) - pi / (2 * std::sqrt(2.0))) < 1e-14);
  CHECK(b_2_closed_form(4.0) == doctest::Approx(0.5 * b_2_closed_form(1.0)).epsilon(1e-15));
  // Closed form against the integral representation -(1/(4 pi sqrt u2)) \int ds/(1+s^4).
  boost::math::quadrature::exp_sinh<double> es;
  const double I = es.integrate([](double s) { return 1.0 / (1.0 + s * s * s * s); }, 0.0,
                                std::numeric_limits<double>::infinity());
  CHECK(std::abs(b_2_closed_form(2.0) + I / (4 * pi * std::sqrt(2.0))) < 1e-8);
  // The closed form coincides with B_2 at c1 = u2; under c1 = u2/2 the two
  // differ by sqrt(2).
  for (double u2 : {0.5, 1.0, 2.0}) {
    CHECK(b_nu(u2, 2.0) == doctest::Approx(b_2_closed_form(u2)).epsilon(1e-10));
    CHECK(b_nu(u2 / 2, 2.0) == doctest::Approx(std::sqrt(2.0) * b_2_closed_form(u2)).epsilon(1e-10));
  }
}

TEST_CASE("smoothed local correlation") {
  const auto u = Profile::exponential();
  CHECK(sigma_smoothed(0.1, -0.2, 1.0, u) ==
        doctest::Approx(sigma_smoothed(-0.2, 0.1, 1.0, u)).epsilon(1e-10));
  for (double d : {1e-4, 1e-3}) {
    const double s = sigma_smoothed(d / 2, -d / 2, 1.0, u);
    CHECK(s < 0.0);
  }
  const auto r = sigma_asymptotic(0.0, 1e-3, 1.0, u, 1.0, 1.0);
  CHECK(std::abs(r.sigma_value / r.asymptotic_value - 1.0) < 0.05);
  CHECK(r.asymptotic_value < 0.0);
  CHECK(r.nu == 2.0);
  CHECK(r.c1 == 1.0);
  const auto r2 = sigma_asymptotic(0.0, 2e-3, 1.0, u, 1.0, 1.0);
  CHECK(r2.asymptotic_value / r.asymptotic_value == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-12));
  const auto p = Profile::power_law(1.5);
  const auto r3 = sigma_asymptotic(0.0, 1e-3, 1.0, p, 1.0, 1.0);
  const auto r4 = sigma_asymptotic(0.0, 2e-3, 1.0, p, 1.0, 1.0);
  CHECK(std::log(r4.asymptotic_value / r3.asymptotic_value) / std::log(2.0) ==
        doctest::Approx(-4.0 / 3.0).epsilon(1e-12));
  CHECK(r3.asymptotic_unscaled * 2.0 == doctest::Approx(r3.asymptotic_value).epsilon(1e-12));
  CHECK_THROWS_AS(sigma_smoothed(0.1, 0.1, 1.0, u), DomainError);
}

TEST_CASE("local exponent from the theory") {
  for (const auto& u : {Profile::exponential(), Profile::power_law(1.5)}) {
    const double nu = u.small_p_constants().nu;
    std::vector<double> x, y;
    for (int k = 0; k <= 8; ++k) {
      const double d = std::pow(10.0, -4.0 + 2.0 * k / 8.0);
      x.push_back(std::log(d));
      y.push_back(std::log(std::abs(sigma_smoothed(d / 2, -d / 2, 1.0, u))));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
    }
    CHECK(std::abs(sxy / sxx + (2.0 - 1.0 / nu)) <= 0.05);
  }
}
