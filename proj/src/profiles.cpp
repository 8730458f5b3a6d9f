#include "brm/profiles.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "brm/errors.hpp"
#include "brm/quadrature.hpp"

namespace brm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

// 1 - sin(x)/x, accurate for all x.
double one_minus_sinc(double x) {
  const double x2 = x * x;
  if (std::abs(x) < 1.0) {
    // Alternating series x^2/3! - x^4/5! + ...; truncation below 1e-17.
    double term = x2 / 6.0;
    double sum = 0.0;
    for (int k = 1; k < 12; ++k) {
      sum += term;
      term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    }
    return sum;
  }
  return 1.0 - std::sin(x) / x;
}

std::vector<double> dyadic_breakpoints(double upper) {
  std::vector<double> bp{0.0};
  for (double t = 1.0; t < upper; t *= 2.0) bp.push_back(t);
  bp.push_back(upper);
  return bp;
}

quad::Options tight() {
  quad::Options o;
  o.abs_tol = 1e-15;
  o.rel_tol = 1e-12;
  o.max_intervals = 20000;
  return o;
}

template <class R>
double checked(const R& r, const char* what) {
  if (!r.converged) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge (error estimate " << r.error
        << ")";
    throw NumericalError(msg.str(), r.error);
  }
  return r.value;
}

// \int_0^\infty g(t) cos(pt) dt for smooth decreasing g, by panels up to the
// first zero of the cosine and an accelerated oscillatory tail.
template <class G>
double cosine_transform(G&& g, double p, const char* what) {
  const double first_zero = 0.5 * kPi / p;
  const auto bp = dyadic_breakpoints(first_zero);
  auto body = quad::integrate<double>(
      [&](double t) { return g(t) * std::cos(p * t); },
      std::span<const double>(bp), tight());
  auto tail = quad::cosine_tail(g, p, first_zero, tight());
  checked(body, what);
  checked(tail, what);
  return body.value + tail.value;
}

std::string format_param(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::box:
      return "box";
    case ProfileKind::exponential:
      return "exponential";
    case ProfileKind::gaussian:
      return "gaussian";
    case ProfileKind::power_law:
      return "power_law";
  }
  return "unknown";
}

ProfileKind parse_profile_kind(std::string_view name) {
  if (name == "box") return ProfileKind::box;
  if (name == "exponential") return ProfileKind::exponential;
  if (name == "gaussian") return ProfileKind::gaussian;
  if (name == "power_law" || name == "power-law") return ProfileKind::power_law;
  throw ConfigError("unknown profile kind '" + std::string(name) + "'");
}

Profile Profile::box(double width) { return Profile(ProfileKind::box, width); }
Profile Profile::exponential(double scale) {
  return Profile(ProfileKind::exponential, scale);
}
Profile Profile::gaussian(double scale) {
  return Profile(ProfileKind::gaussian, scale);
}
Profile Profile::power_law(double exponent) {
  return Profile(ProfileKind::power_law, exponent);
}
Profile Profile::make(ProfileKind kind, double param) {
  return Profile(kind, param);
}

Profile::Profile(ProfileKind kind, double param) : kind_(kind), param_(param) {
  if (!(param > 0.0) || !std::isfinite(param)) {
    throw ConfigError("profile parameter must be positive and finite");
  }
  const double s = param;
  switch (kind) {
    case ProfileKind::box:
      norm_ = 1.0 / s;
      break;
    case ProfileKind::exponential:
      norm_ = 0.5 / s;
      break;
    case ProfileKind::gaussian:
      norm_ = 1.0 / (s * std::sqrt(2.0 * kPi));
      break;
    case ProfileKind::power_law:
      norm_ = 0.5 * s;
      break;
  }

  const double u2 = second_moment();
  if (kind == ProfileKind::power_law && !(s > 1.0)) {
    moments_error_ = "power_law exponent must exceed 1 for a small-p expansion";
    return;
  }
  if (kind == ProfileKind::power_law && s == 2.0) {
    moments_error_ =
        "power_law exponent 2 gives a logarithmic small-p correction";
    return;
  }
  ProfileMoments m{u2, 2.0, 0.0};
  if (std::isfinite(u2)) {
    m.c1 = 0.5 * u2;
  } else {
    m.nu = s;
    m.c1 = norm_ * fractional_tail_integral(s);
  }
  moments_ = m;
  fitted_c1_ = fit_c1();
}

std::string Profile::describe() const {
  return std::string(to_string(kind_)) + "(" + format_param(param_) + ")";
}

double Profile::power_law_g(double t) const {
  return std::pow(1.0 + t, -1.0 - param_);
}

double Profile::operator()(double t) const {
  const double a = std::abs(t);
  const double s = param_;
  switch (kind_) {
    case ProfileKind::box:
      return a < 0.5 * s ? norm_ : 0.0;
    case ProfileKind::exponential:
      return norm_ * std::exp(-a / s);
    case ProfileKind::gaussian:
      return norm_ * std::exp(-0.5 * (a / s) * (a / s));
    case ProfileKind::power_law:
      return norm_ * power_law_g(a);
  }
  return 0.0;
}

double Profile::fourier(double p) const {
  const double a = std::abs(p);
  if (a == 0.0) return 1.0;
  const double s = param_;
  switch (kind_) {
    case ProfileKind::box: {
      const double x = 0.5 * s * a;
      return x < 1.0 ? 1.0 - one_minus_sinc(x) : std::sin(x) / x;
    }
    case ProfileKind::exponential:
      return 1.0 / (1.0 + (s * a) * (s * a));
    case ProfileKind::gaussian:
      return std::exp(-0.5 * (s * a) * (s * a));
    case ProfileKind::power_law: {
      if (a < 1.0) return 1.0 - one_minus_fourier(a);
      // Two integrations by parts:
      //   \int_0^\infty g cos(pt) = -g'(0)/p^2 - p^{-2} \int_0^\infty g'' cos(pt)
      const double e = s;
      auto g2 = [e](double t) {
        return (1.0 + e) * (2.0 + e) * std::pow(1.0 + t, -3.0 - e);
      };
      const double rest = cosine_transform(g2, a, "power-law Fourier transform");
      return 2.0 * norm_ * ((1.0 + e) - rest) / (a * a);
    }
  }
  return 0.0;
}

double Profile::one_minus_fourier(double p) const {
  const double a = std::abs(p);
  if (a == 0.0) return 0.0;
  const double s = param_;
  switch (kind_) {
    case ProfileKind::box:
      return one_minus_sinc(0.5 * s * a);
    case ProfileKind::exponential: {
      const double q = (s * a) * (s * a);
      return q / (1.0 + q);
    }
    case ProfileKind::gaussian:
      return -std::expm1(-0.5 * (s * a) * (s * a));
    case ProfileKind::power_law: {
      if (a >= 1.0) return 1.0 - fourier(a);
      // 2C [ \int_0^T 2 sin^2(pt/2) g  +  \int_T^\infty g  -  \int_T^\infty g cos(pt) ]
      // with T the first zero of cos(pt).
      const double first_zero = 0.5 * kPi / a;
      const auto bp = dyadic_breakpoints(first_zero);
      auto g = [this](double t) { return power_law_g(t); };
      auto body = quad::integrate<double>(
          [&](double t) {
            const double h = std::sin(0.5 * a * t);
            return 2.0 * h * h * g(t);
          },
          std::span<const double>(bp), tight());
      auto tail = quad::cosine_tail(g, a, first_zero, tight());
      checked(body, "power-law 1 - u_F");
      checked(tail, "power-law 1 - u_F");
      const double plain_tail = std::pow(1.0 + first_zero, -s) / s;
      return 2.0 * norm_ * (body.value + plain_tail - tail.value);
    }
  }
  return 0.0;
}

double Profile::fourier_by_quadrature(double p) const {
  const double a = std::abs(p);
  if (a == 0.0) return 1.0;
  if (kind_ == ProfileKind::box) {
    const double half = 0.5 * param_;
    std::vector<double> bp{0.0};
    for (double t = kPi / a; t < half; t += kPi / a) bp.push_back(t);
    bp.push_back(half);
    auto r = quad::integrate<double>(
        [&](double t) { return std::cos(a * t); }, std::span<const double>(bp),
        tight());
    return 2.0 * norm_ * checked(r, "box Fourier quadrature");
  }
  auto u = [this](double t) { return (*this)(t); };
  return 2.0 * cosine_transform(u, a, "Fourier quadrature");
}

double Profile::fourier_envelope(double p) const {
  const double a = std::abs(p);
  const double s = param_;
  switch (kind_) {
    case ProfileKind::box:
      return a == 0.0 ? 1.0 : std::min(1.0, 2.0 / (s * a));
    case ProfileKind::exponential:
      return 1.0 / (1.0 + (s * a) * (s * a));
    case ProfileKind::gaussian:
      return std::exp(-0.5 * (s * a) * (s * a));
    case ProfileKind::power_law:
      return a == 0.0 ? 1.0 : std::min(1.0, 2.0 * s * (1.0 + s) / (a * a));
  }
  return 1.0;
}

double Profile::second_moment() const {
  const double s = param_;
  switch (kind_) {
    case ProfileKind::box:
      return s * s / 12.0;
    case ProfileKind::exponential:
      return 2.0 * s * s;
    case ProfileKind::gaussian:
      return s * s;
    case ProfileKind::power_law:
      return s > 2.0 ? 2.0 / ((s - 1.0) * (s - 2.0)) : kInf;
  }
  return kInf;
}

double Profile::fractional_tail_integral(double a) {
  if (!(a > 0.0 && a < 2.0)) {
    throw DomainError("fractional tail integral needs exponent in (0, 2)");
  }
  // [0, 1] after y = s^m with m = 1/(2 - a), which makes the integrand
  // bounded at the origin.
  const double m = 1.0 / (2.0 - a);
  auto near = quad::integrate<double>(
      [&](double s) {
        if (s == 0.0) return 0.5 * m;
        const double y = std::pow(s, m);
        const double h = std::sin(0.5 * y);
        return 2.0 * h * h * std::pow(y, -1.0 - a) * m * std::pow(s, m - 1.0);
      },
      0.0, 1.0, tight());
  auto g = [a](double y) { return std::pow(y, -1.0 - a); };
  auto osc = quad::cosine_tail(g, 1.0, 1.0, tight());
  checked(near, "fractional tail integral");
  checked(osc, "fractional tail integral");
  return 2.0 * (near.value + 1.0 / a - osc.value);
}

double Profile::fitted_c1() const {
  if (!moments_) throw DomainError(moments_error_);
  return fitted_c1_;
}

double Profile::fit_c1() const {
  const double nu = moments_->nu;
  std::array<double, 2> kappa{2.0, 4.0};
  if (kind_ == ProfileKind::power_law) {
    const double e = param_;
    if (e < 2.0) {
      kappa = {2.0 - e, 1.0};
    } else {
      kappa = {std::min(e - 2.0, 2.0), 0.0};
      kappa[1] = kappa[0] < 2.0 ? 2.0 : 3.0;
    }
  }
  constexpr int kPoints = 13;
  Eigen::MatrixXd design(kPoints, 3);
  Eigen::VectorXd rhs(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    const double p = std::pow(10.0, -4.0 + 2.0 * i / (kPoints - 1));
    design(i, 0) = 1.0;
    design(i, 1) = std::pow(p, kappa[0]);
    design(i, 2) = std::pow(p, kappa[1]);
    rhs(i) = one_minus_fourier(p) / std::pow(p, nu);
  }
  Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
  return coef(0);
}

ProfileMoments Profile::small_p_constants() const {
  if (!moments_) throw DomainError(moments_error_);
  const double fitted = fitted_c1_;
  if (std::abs(fitted - moments_->c1) > 0.01 * moments_->c1) {
    std::ostringstream msg;
    msg.precision(12);
    msg << describe() << ": small-p fit c1 = " << fitted
        << " disagrees with returned c1 = " << moments_->c1;
    throw SelfCheckError(msg.str(), moments_->c1, fitted);
  }
  return *moments_;
}

}  // namespace brm
