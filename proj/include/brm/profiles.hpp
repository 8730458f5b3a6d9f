#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace brm {

enum class ProfileKind { box, exponential, gaussian, power_law };

std::string_view to_string(ProfileKind kind);
ProfileKind parse_profile_kind(std::string_view name);

/// Second moment and small-p behaviour of the profile's Fourier transform,
/// 1 - u_F(p) = c1 |p|^nu + o(|p|^nu).
struct ProfileMoments {
  double u2;  // +inf when the second moment diverges
  double nu;
  double c1;
};

/// Even, nonnegative, nonincreasing band profile u(t) with unit integral.
///
/// Members of each family:
///   box          (1/s) on |t| < s/2                    (s = width, default 1)
///   exponential  exp(-|t|/s) / (2s)                    (s = scale)
///   gaussian     exp(-t^2 / 2s^2) / (s sqrt(2 pi))     (s = scale)
///   power_law    (a/2) (1 + |t|)^(-1-a)                (a = tail exponent)
///
/// Profiles are immutable; all members are safe to call concurrently.
class Profile {
 public:
  static Profile box(double width = 1.0);
  static Profile exponential(double scale = 1.0);
  static Profile gaussian(double scale = 1.0);
  static Profile power_law(double exponent);
  static Profile make(ProfileKind kind, double param);

  ProfileKind kind() const { return kind_; }
  double param() const { return param_; }
  /// Constant prefactor of the family member (1/s, 1/(2s), ..., a/2).
  double normalization() const { return norm_; }
  /// sup_t u(t) = u(0).
  double sup() const { return norm_; }
  std::string describe() const;

  /// u(t).
  double operator()(double t) const;

  /// u_F(p) = \int u(t) e^{ipt} dt. Closed form except for power_law.
  double fourier(double p) const;

  /// 1 - u_F(p) evaluated without cancellation at small |p|.
  double one_minus_fourier(double p) const;

  /// u_F(p) by numerical quadrature of the cosine transform, for any kind.
  double fourier_by_quadrature(double p) const;

  /// Upper bound on |u_F(p)|, decaying in |p|.
  double fourier_envelope(double p) const;

  /// \int t^2 u(t) dt, +inf when divergent.
  double second_moment() const;

  /// (u2, nu, c1). Throws DomainError when u_F has no expansion of the form
  /// 1 - c1|p|^nu with nu > 1 (power_law with exponent <= 1 or == 2).
  ProfileMoments small_p_constants() const;

  /// Least-squares estimate of c1 from (1 - u_F(p)) / |p|^nu sampled on
  /// p in [1e-4, 1e-2], extrapolated to p = 0.
  double fitted_c1() const;

  /// For power_law with exponent a in (0, 2): the constant
  /// \int_R (1 - cos y) / |y|^{1+a} dy, by quadrature.
  static double fractional_tail_integral(double a);

 private:
  Profile(ProfileKind kind, double param);

  double power_law_g(double t) const;
  double fit_c1() const;

  ProfileKind kind_;
  double param_;
  double norm_;
  std::optional<ProfileMoments> moments_;
  std::string moments_error_;
  double fitted_c1_ = 0.0;
};

}  // namespace brm
