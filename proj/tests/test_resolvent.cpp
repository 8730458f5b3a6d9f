#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "brm/errors.hpp"
#include "brm/resolvent.hpp"
#include "brm/theory.hpp"

using namespace brm;

namespace {

EnsembleConfig make_config(long n, double b, ProfileKind kind, std::uint64_t seed) {
  EnsembleConfig c;
  c.n = n;
  c.b = b;
  c.profile = Profile::make(kind, kind == ProfileKind::power_law ? 1.5 : 1.0);
  c.base_seed = seed;
  return c;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("zero matrix") {
  BandMatrixSample H(3, 0, 1.0, 0);
  const auto F = factorize(H, cplx(0, 1));
  for (long j = 0; j < 3; ++j) CHECK(F.pivot(j) == cplx(0, -1));
  for (const auto& g : resolvent_diagonal(F)) CHECK(std::abs(g - cplx(0, 1)) < 1e-15);
  CHECK(std::abs(normalized_trace(F) - cplx(0, 1)) < 1e-15);
  const auto e = eigenvalues_dense(H);
  for (double x : e.eigenvalues) CHECK(x == 0.0);
  CHECK_THROWS_AS(factorize(H, cplx(1.0, 1e-13)), DomainError);
}

TEST_CASE("factorization reconstructs H - zI and conjugates exactly") {
  const auto c = make_config(24, 8.0, ProfileKind::exponential, 5);  // N = 49
  const auto H = sample(c, 0);
  const cplx z(0.0, 3.0);
  const auto F = factorize(H, z);
  CHECK(F.min_pivot_ratio() >= 1.0);
  CHECK(reconstruction_residual(F, H) <= 1e-10 * (H.max_abs() + std::abs(z)));
  const auto Fc = factorize(H, std::conj(z));
  for (long j = 0; j < H.N(); ++j) CHECK(Fc.pivot(j) == std::conj(F.pivot(j)));
  const auto g = resolvent_diagonal(F), gc = resolvent_diagonal(Fc);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(gc[i] - std::conj(g[i])) <= 1e-14);
  CHECK(std::abs(normalized_trace(Fc) - std::conj(normalized_trace(F))) <= 1e-14);
}

TEST_CASE("band recursion against dense inverse and eigenvalue sum, 50 instances") {
  std::mt19937_64 gen(314);
  double worst_diag = 0.0, worst_trace = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const long n = std::uniform_int_distribution<long>(10, 99)(gen);
    const double b = std::uniform_real_distribution<double>(1.0, 20.0)(gen);
    const auto kind = static_cast<ProfileKind>(inst % 4);
    const auto H = sample(make_config(n, b, kind, gen()), inst);
    const auto eigs = eigenvalues_dense(H);
    for (cplx z : {cplx(0, 3), cplx(0.5, 3.2)}) {
      const auto F = factorize(H, z);
      const auto g = resolvent_diagonal(F);
      worst_diag = std::max(worst_diag, max_diff(g, resolvent_diagonal_dense(H, z)));
      worst_trace = std::max(worst_trace, std::abs(normalized_trace(F) -
                                                   normalized_trace(eigs.eigenvalues, z)));
      for (const auto& gx : g) {
        CHECK(gx.imag() > 0.0);
        CHECK(std::abs(gx) <= 1.0 / z.imag() * (1 + 1e-12));
      }
    }
  }
  CHECK(worst_diag <= 1e-10);
  CHECK(worst_trace <= 1e-9);
}

TEST_CASE("resolvent of a full-bandwidth sample") {
  const auto A = sample_goe(120, 1.0, 3, 0);
  for (cplx z : {cplx(0, 3), cplx(-1.0, 0.2), cplx(0.3, -0.05)}) {
    const auto F = factorize(A, z);
    CHECK(max_diff(resolvent_diagonal(F), resolvent_diagonal_dense(A, z)) <= 1e-10);
    const cplx f = normalized_trace(F);
    CHECK(f.imag() * z.imag() > 0.0);
    CHECK(std::abs(f) <= 1.0 / std::abs(z.imag()));
  }
}

TEST_CASE("pivot monitor falls back to the dense solve") {
  const auto H = sample(make_config(30, 6.0, ProfileKind::box, 8), 2);
  FactorizeOptions opt;
  opt.pivot_threshold = 1e300;
  const cplx z(0.2, 3.0);
  const auto F = factorize(H, z, opt);
  CHECK(F.used_dense_fallback());
  CHECK(max_diff(resolvent_diagonal(F), resolvent_diagonal(factorize(H, z))) <= 1e-12);
  CHECK_FALSE(factorize(H, z).used_dense_fallback());
}

TEST_CASE("dense eigenvalues") {
  BandMatrixSample P(2, 1, 1.0, 0);
  P.lower(0, 1) = 1.0;
  const auto e = eigenvalues_dense(P);
  CHECK(e.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(e.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-15));

  // Narrow (band reduction) and wide (dense) code paths.
  for (double b : {4.0, 150.0}) {
    const auto H = sample(make_config(100, b, ProfileKind::box, 77), 1);  // N = 201
    const auto s = eigenvalues_dense(H);
    REQUIRE(s.eigenvalues.size() == 201);
    CHECK(std::is_sorted(s.eigenvalues.begin(), s.eigenvalues.end()));
    const double sum = std::accumulate(s.eigenvalues.begin(), s.eigenvalues.end(), 0.0);
    CHECK(std::abs(sum - H.trace()) <= 1e-8 * std::max(1.0, std::abs(H.trace())));
    double sq = 0.0;
    for (double x : s.eigenvalues) sq += x * x;
    CHECK(std::abs(sq - H.frobenius_squared()) <= 1e-8 * H.frobenius_squared());
    const double norm = H.row_sum_norm();
    CHECK(s.eigenvalues.front() >= -norm);
    CHECK(s.eigenvalues.back() <= norm);
    // Independent solver on the dense matrix.
    Eigen::MatrixXd D(201, 201);
    for (long i = 0; i < 201; ++i)
      for (long j = 0; j < 201; ++j) D(i, j) = H(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D, Eigen::EigenvaluesOnly);
    for (long i = 0; i < 201; ++i) CHECK(std::abs(es.eigenvalues()(i) - s.eigenvalues[i]) < 1e-12);
  }
}

TEST_CASE("dense eigensolver refuses oversized input") {
  BandMatrixSample H(11, 0, 1.0, 0);
  try {
    eigenvalues_dense(H, 10);
    FAIL("expected refusal");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("cap of 10") != std::string::npos);
  }
}

TEST_CASE("counting-function distance") {
  const int N = 1000;
  std::vector<double> q(N);
  for (int j = 0; j < N; ++j) q[j] = semicircle_quantile((j + 0.5) / N, 1.0);
  CHECK(counting_function_distance(q, 1.0) <= 1.0 / N);
  // All mass at one point is far from the semicircle.
  std::vector<double> zeros(N, 0.0);
  CHECK(counting_function_distance(zeros, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("boundary set") {
  auto r = boundary_set(100, 10, 2);
  CHECK(r.first == -80);
  CHECK(r.last == 80);
  r = boundary_set(100, 10, 0);
  CHECK(r.size() == 201);
  r = boundary_set(100, 10, 10);
  CHECK(r.first == 0);
  CHECK(r.last == 0);
  CHECK_THROWS_AS(boundary_set(100, 10, 11), DomainError);
}

TEST_CASE("blocked kernels agree with the column-by-column kernels") {
  FactorizeOptions unblocked;
  unblocked.block = 0;
  for (int block : {3, 8, 64}) {
    FactorizeOptions blocked;
    blocked.block = block;
    for (const auto kind : {ProfileKind::box, ProfileKind::gaussian, ProfileKind::power_law}) {
      const double b = kind == ProfileKind::box ? (block == 64 ? 270.0 : 40.0) : (block == 64 ? 70.0 : 9.0);
      const auto H = sample(make_config(150, b, kind, 21 + block), 1);
      REQUIRE(H.bandwidth() >= 2 * block);
      for (cplx z : {cplx(0, 2.5), cplx(0.7, -0.3)}) {
        const auto Fb = factorize(H, z, blocked);
        const auto Fu = factorize(H, z, unblocked);
        double dp = 0.0;
        for (long j = 0; j < H.N(); ++j) dp = std::max(dp, std::abs(Fb.pivot(j) - Fu.pivot(j)));
        CHECK(dp <= 1e-11);
        CHECK(reconstruction_residual(Fb, H) <= 1e-10 * (H.max_abs() + std::abs(z)));
        const auto gb = resolvent_diagonal(Fb);
        CHECK(max_diff(gb, resolvent_diagonal(Fu)) <= 1e-10);
        CHECK(max_diff(gb, resolvent_diagonal_dense(H, z)) <= 1e-10);
      }
    }
  }
  const auto A = sample_goe(301, 1.0, 4, 0);
  const cplx z(0.1, 0.4);
  CHECK(max_diff(resolvent_diagonal(factorize(A, z)), resolvent_diagonal_dense(A, z)) <= 1e-10);
}
