#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kband/errors.hpp"
#include "kband/kernel.hpp"
#include "support.hpp"

using namespace kband;
using testsupport::separated_inputs;

namespace {
const KernelParams kEta30{30.0, 0.0};
}

TEST_CASE("pw_kernel closed form and diagonal limit") {
  CHECK(pw_kernel(0.5, 0.5, kEta30) == doctest::Approx(30.0 / std::numbers::pi).epsilon(1e-14));
  CHECK(pw_kernel(0.5, 0.5, kEta30) == doctest::Approx(9.549296585513721).epsilon(1e-12));

  // sin(pi) zero of the sinc
  CHECK(pw_kernel(0.0, std::numbers::pi / 30.0, kEta30) == doctest::Approx(0.0).epsilon(1e-12));

  // independent high-precision evaluation of sin(3)/(0.1 pi)
  const long double expected =
      std::sin(3.0L) / (0.1L * 3.14159265358979323846264338327950288L);
  CHECK(pw_kernel(0.0, 0.1, kEta30) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-14));
  CHECK(pw_kernel(0.0, 0.1, kEta30) == doctest::Approx(0.4491989370379196).epsilon(1e-12));
}

TEST_CASE("pw_kernel symmetry is exact") {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    const double z = rng.uniform(-3.0, 3.0);
    const double s = rng.uniform(-3.0, 3.0);
    CHECK(pw_kernel(z, s, kEta30) == pw_kernel(s, z, kEta30));
  }
}

TEST_CASE("pw_kernel continuity at the diagonal") {
  const double s = 0.3;
  CHECK(std::abs(pw_kernel(s + 1e-12, s, kEta30) - 30.0 / std::numbers::pi) < 1e-6);
}

TEST_CASE("gram matrices are positive semidefinite without jitter") {
  Rng rng(5);
  for (int rep = 0; rep < 25; ++rep) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(7));
    const Eigen::VectorXd x = separated_inputs(n, rng, 1e-4);
    const GramPack gp = gram(x, kEta30);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gp.K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("gram assembly against the elementwise oracle") {
  Eigen::VectorXd single(1);
  single << 0.5;
  const GramPack one = gram(single, kEta30);
  CHECK(one.K(0, 0) == doctest::Approx(30.0 / std::numbers::pi).epsilon(1e-14));

  Eigen::VectorXd two(2);
  two << 0.0, 0.1;
  const GramPack gp = gram(two, kEta30);
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      CHECK(gp.K(i, j) == doctest::Approx(pw_kernel(two[i], two[j], kEta30)).epsilon(1e-15));
    }
  }
  CHECK(gp.K(0, 1) == doctest::Approx(0.4491989370379196).epsilon(1e-12));

  // jitter lands on the diagonal only
  const KernelParams jittered{30.0, 1e-8};
  const GramPack gj = gram(two, jittered);
  CHECK(gj.K(0, 0) == doctest::Approx(jittered.diagonal() + jittered.jitter_abs()).epsilon(1e-15));
  CHECK(gj.K(0, 1) == doctest::Approx(gp.K(0, 1)).epsilon(1e-15));
}

TEST_CASE("gram rejects duplicate inputs") {
  Eigen::VectorXd dup(2);
  dup << 0.25, 0.25;
  CHECK_THROWS_AS(gram(dup, kEta30), DuplicateInputs);
  Eigen::VectorXd near(2);
  near << 0.25, 0.25 + 1e-13;
  CHECK_THROWS_AS(gram(near, kEta30), DuplicateInputs);
}

TEST_CASE("with_d splits the Gram blocks") {
  Rng rng(9);
  const Eigen::VectorXd x = separated_inputs(6, rng);
  const GramPack gp = gram(x, kEta30).with_d(4);
  CHECK(gp.K1.rows() == 6);
  CHECK(gp.K1.cols() == 4);
  CHECK((gp.K2 - gp.K.topLeftCorner(4, 4)).norm() == 0.0);
  CHECK((gp.K1 - gp.K.leftCols(4)).norm() == 0.0);
  CHECK_THROWS(gram(x, kEta30).with_d(0));
  CHECK_THROWS(gram(x, kEta30).with_d(7));
}

TEST_CASE("min-norm interpolation on the two-point instance") {
  Eigen::VectorXd x(2), z(2);
  x << 0.0, 0.1;
  z << 1.0, 0.0;
  const Interpolant f = min_norm_interpolant(x, z, kEta30);

  // direct 2x2 solve via Cramer's rule
  const double a = 30.0 / std::numbers::pi;
  const double b = pw_kernel(0.0, 0.1, kEta30);
  const double det = a * a - b * b;
  CHECK(f.coefficients[0] == doctest::Approx(a / det).epsilon(1e-12));
  CHECK(f.coefficients[1] == doctest::Approx(-b / det).epsilon(1e-12));

  CHECK(eval_interpolant(f, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(eval_interpolant(f, 0.1)) < 1e-10);
}

TEST_CASE("zero targets give the zero interpolant") {
  Rng rng(3);
  const Eigen::VectorXd x = separated_inputs(5, rng);
  const Interpolant f = min_norm_interpolant(x, Eigen::VectorXd::Zero(5), kEta30);
  CHECK(f.coefficients.norm() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.squared_norm == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(eval_interpolant(f, 0.37) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("interpolation reproduces targets at the centers") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(9));
    const Eigen::VectorXd x = separated_inputs(n, rng);
    const Eigen::VectorXd z = testsupport::random_vector(n, rng);
    const Interpolant f = min_norm_interpolant(x, z, kEta30);
    for (Eigen::Index k = 0; k < n; ++k) {
      CHECK(eval_interpolant(f, x[k]) == doctest::Approx(z[k]).epsilon(1e-8));
    }
  }
}

TEST_CASE("interpolant norm identity alpha'K alpha = z'K^-1 z") {
  Rng rng(33);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(9));
    const Eigen::VectorXd x = separated_inputs(n, rng);
    const Eigen::VectorXd z = testsupport::random_vector(n, rng);
    const Interpolant f = min_norm_interpolant(x, z, kEta30);
    const GramPack gp = gram(x, kEta30);
    // independent route through a pivoted LDLT
    const double rhs = z.dot(gp.K.ldlt().solve(z));
    CHECK(f.squared_norm == doctest::Approx(rhs).epsilon(1e-8));
  }
}

TEST_CASE("no interpolating element of a richer span has smaller norm") {
  Rng rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(3));  // n <= 4
    const Eigen::VectorXd x = separated_inputs(n, rng, 5e-2);
    const Eigen::VectorXd z = testsupport::random_vector(n, rng);
    const Interpolant f = min_norm_interpolant(x, z, kEta30);

    // widen the span with extra centers, sample interpolating coefficient
    // vectors, and compare RKHS norms
    const Eigen::Index extra = 3;
    Eigen::VectorXd centers(n + extra);
    centers.head(n) = x;
    for (Eigen::Index e = 0; e < extra; ++e) centers[n + e] = rng.uniform01();
    const GramPack big = gram(centers, kEta30);
    const Eigen::MatrixXd eval_rows = big.K.topRows(n);  // k(x_i, centers_j)

    const Eigen::MatrixXd pinv =
        eval_rows.completeOrthogonalDecomposition().pseudoInverse();
    const Eigen::VectorXd base = pinv * z;
    const Eigen::MatrixXd null_proj =
        Eigen::MatrixXd::Identity(n + extra, n + extra) - pinv * eval_rows;
    for (int s = 0; s < 60; ++s) {
      const Eigen::VectorXd beta =
          base + null_proj * testsupport::random_vector(n + extra, rng, 2.0);
      if ((eval_rows * beta - z).norm() > 1e-8) continue;
      const double norm_sq = beta.dot(big.K * beta);
      CHECK(norm_sq >= f.squared_norm - 1e-9);
    }
  }
}

TEST_CASE("interpolating samples of an interpolant recovers its coefficients") {
  Rng rng(55);
  const Eigen::VectorXd x = separated_inputs(6, rng, 1e-2);
  const Eigen::VectorXd z = testsupport::random_vector(6, rng);
  const Interpolant g = min_norm_interpolant(x, z, kEta30);

  Eigen::VectorXd sampled(6);
  for (Eigen::Index k = 0; k < 6; ++k) sampled[k] = eval_interpolant(g, x[k]);
  const Interpolant h = min_norm_interpolant(x, sampled, kEta30);
  CHECK((h.coefficients - g.coefficients).norm() < 1e-8 * (1.0 + g.coefficients.norm()));
}

TEST_CASE("eval_interpolant matches term-by-term summation") {
  Rng rng(77);
  const Eigen::VectorXd x = separated_inputs(3, rng, 1e-2);
  const Eigen::VectorXd z = testsupport::random_vector(3, rng);
  const Interpolant f = min_norm_interpolant(x, z, kEta30);
  for (int rep = 0; rep < 50; ++rep) {
    const double q = rng.uniform(-0.5, 1.5);
    long double acc = 0.0L;
    for (Eigen::Index k = 0; k < 3; ++k) {
      acc += static_cast<long double>(f.coefficients[k]) * pw_kernel(q, x[k], kEta30);
    }
    CHECK(eval_interpolant(f, q) == doctest::Approx(static_cast<double>(acc)).epsilon(1e-12));
  }
}

TEST_CASE("kernel params validation") {
  Eigen::VectorXd x(1);
  x << 0.5;
  CHECK_THROWS(gram(x, KernelParams{-1.0, 0.0}));
  CHECK_THROWS(gram(x, KernelParams{30.0, -1e-9}));
}
