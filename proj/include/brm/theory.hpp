#pragma once

#include <complex>

#include "brm/profiles.hpp"

namespace brm {

using cplx = std::complex<double>;

/// w(z) with its residual check.
struct StieltjesValue {
  cplx z;
  cplx w;
  double v;
  /// |w (-z - v w) - 1|
  double residual() const;
};

/// Root of v w^2 + z w + 1 = 0 with Im w * Im z >= 0. Throws DomainError
/// for real z.
StieltjesValue stieltjes_w(cplx z, double v);

double semicircle_density(double lambda, double v);
double semicircle_cdf(double lambda, double v);
/// Inverse of semicircle_cdf on [0, 1].
double semicircle_quantile(double p, double v);

/// w(lambda + i0) = tau + i rho inside the bulk.
struct EdgeValues {
  double lambda;
  double tau;
  double rho;
  cplx w() const { return {tau, rho}; }
};

/// Throws DomainError when |lambda| >= 2 sqrt(v).
EdgeValues boundary_w(double lambda, double v);

/// eta = 2 sqrt(v) + 1 and membership in {|Im z| >= eta}.
double lambda_eta(double v);
bool in_lambda_eta(cplx z, double v);

/// |(1 - v w1 w2) - w1 w2 (z1 - z2)/(w1 - w2)|.
double factor_identity_residual(cplx z1, cplx z2, double v);
/// The same comparison without the w1 w2 factor on the right-hand side.
/// Nonzero in general; reported for comparison only.
double factor_identity_residual_unscaled(cplx z1, cplx z2, double v);

/// Integral value with its combined quadrature and truncation error.
struct QValue {
  cplx value;
  double error;
};

/// Q(z1, z2) = (1/2pi) \int w1^2 w2^2 u_F / (1 - v w1 w2 u_F)^2 dp for z1,
/// z2 in Lambda_eta. Throws NumericalError when the error estimate exceeds
/// 1e-8 relative to the integral's scale.
cplx q_integral(cplx z1, cplx z2, double v, const Profile& u);

/// Q as a function of (w1, w2). `one_minus_b` must equal 1 - v w1 w2 and
/// can be supplied in a cancellation-free form when w1 w2 is close to 1/v.
QValue q_integral_w(cplx w1, cplx w2, cplx one_minus_b, double v, const Profile& u);

/// S(z1, z2) = 2 v Q / ((1 - v w1^2)(1 - v w2^2)).
cplx s_leading(cplx z1, cplx z2, double v, const Profile& u);

struct GoeEvaluation {
  cplx direct;     // 2v w1^2 w2^2 / ((1-vw1^2)(1-vw2^2)(1-vw1w2)^2)
  cplx via_ratio;  // w1^2 w2^2/(1-vw1w2)^2 replaced by ((w1-w2)/(z1-z2))^2
};

cplx s_goe(cplx z1, cplx z2, double v);
GoeEvaluation s_goe_paths(cplx z1, cplx z2, double v);

/// (1 - v w1^2)(1 - v w2^2) at w1 = w(lambda + i0), w2 = w(lambda - i0).
cplx boundary_product(double lambda, double v);

/// Nb * Sigma(lambda1, lambda2) = -(1/4) sum_{d1,d2 = +-1} d1 d2
/// S(lambda1 + i d1 0, lambda2 + i d2 0), with boundary values substituted.
double sigma_smoothed(double lambda1, double lambda2, double v, const Profile& u);

/// (1 / (2 pi c1^{1/nu})) [\int_0^inf ds/(1+s^{2nu}) - 2 \int_0^inf ds/(1+s^{2nu})^2].
double b_nu(double c1, double nu);

/// -Gamma(5/4) Gamma(3/4) / (4 pi sqrt(u2)).
double b_2_closed_form(double u2);

struct LocalScaleResult {
  double lambda;
  double delta;
  /// Sigma at lambda +- delta/2 divided by Nb.
  double sigma_value;
  /// Leading small-delta term, 2 B_nu(c1) / (2 v rho)^{1/nu} delta^{-(2-1/nu)} / (Nb).
  double asymptotic_value;
  /// B_nu(c1) / (2 rho)^{1/nu} delta^{-(2-1/nu)} / (Nb), the prefactor without
  /// the factor 2 / v^{1/nu}; equal to asymptotic_value / 2 at v = 1.
  double asymptotic_unscaled;
  double nu;
  double c1;
};

LocalScaleResult sigma_asymptotic(double lambda, double delta, double v, const Profile& u,
                                  double N, double b);

}  // namespace brm
