#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "kband/errors.hpp"
#include "kband/normbound.hpp"
#include "support.hpp"

using namespace kband;
using testsupport::random_spd;
using testsupport::random_vector;

namespace {

Ellipsoid value_ellipsoid(const Eigen::VectorXd& center, const Eigen::MatrixXd& shape) {
  return Ellipsoid{center, shape, EllipsoidSpace::FunctionValueSpace};
}

}  // namespace

TEST_CASE("pointwise intervals of canonical ellipsoids") {
  SUBCASE("unit ball gives [-1, 1] everywhere") {
    const auto ivs = pointwise_intervals(
        value_ellipsoid(Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4)));
    for (const auto& [nu, mu] : ivs) {
      CHECK(nu == doctest::Approx(-1.0).epsilon(1e-12));
      CHECK(mu == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("intervals are symmetric about the center") {
    Rng rng(3);
    const Eigen::VectorXd c = random_vector(3, rng);
    const auto ivs = pointwise_intervals(value_ellipsoid(c, random_spd(3, rng)));
    for (Eigen::Index k = 0; k < 3; ++k) {
      CHECK(0.5 * (ivs[static_cast<std::size_t>(k)].first +
                   ivs[static_cast<std::size_t>(k)].second) ==
            doctest::Approx(c[k]).epsilon(1e-10));
      CHECK(ivs[static_cast<std::size_t>(k)].first <= ivs[static_cast<std::size_t>(k)].second);
    }
  }

  SUBCASE("agrees with a rejection-sampling hull") {
    Rng rng(9);
    const Eigen::VectorXd c = random_vector(3, rng, 0.3);
    const Eigen::MatrixXd a = random_spd(3, rng, 0.5, 2.0);
    const Ellipsoid e = value_ellipsoid(c, a);
    const auto ivs = pointwise_intervals(e);

    Eigen::VectorXd lo = Eigen::VectorXd::Constant(3, 1e300);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(3, -1e300);
    long hits = 0;
    for (long s = 0; s < 1000000; ++s) {
      const Eigen::VectorXd z = c + random_vector(3, rng, 1.3);
      if (!e.contains(z)) continue;
      ++hits;
      lo = lo.cwiseMin(z);
      hi = hi.cwiseMax(z);
    }
    REQUIRE(hits > 1000);
    for (Eigen::Index k = 0; k < 3; ++k) {
      CHECK(std::abs(lo[k] - ivs[static_cast<std::size_t>(k)].first) < 1e-2 * 3.0);
      CHECK(std::abs(hi[k] - ivs[static_cast<std::size_t>(k)].second) < 1e-2 * 3.0);
      // the hull never exceeds the support values
      CHECK(lo[k] >= ivs[static_cast<std::size_t>(k)].first - 1e-9);
      CHECK(hi[k] <= ivs[static_cast<std::size_t>(k)].second + 1e-9);
    }
  }

  SUBCASE("coordinate projection equals linear_minmax_over_ellipsoid") {
    Rng rng(13);
    const Ellipsoid e = value_ellipsoid(random_vector(4, rng), random_spd(4, rng));
    const auto ivs = pointwise_intervals(e);
    for (Eigen::Index k = 0; k < 4; ++k) {
      Eigen::VectorXd unit = Eigen::VectorXd::Zero(4);
      unit[k] = 1.0;
      const auto [lo, hi] = linear_minmax_over_ellipsoid(unit, e);
      CHECK(std::abs(lo - ivs[static_cast<std::size_t>(k)].first) < 1e-8);
      CHECK(std::abs(hi - ivs[static_cast<std::size_t>(k)].second) < 1e-8);
    }
  }
}

TEST_CASE("original norm bound arithmetic") {
  SUBCASE("degenerate intervals and vanishing risks shrink tau to delta0") {
    std::vector<std::pair<double, double>> flat(10, {0.0, 0.0});
    const NormBound b = tau_original(flat, RiskBudget{1.0 - 1e-9, 1e-12, 0.0}, 10);
    CHECK(b.tau < 1e-4);
    CHECK(b.tau >= 0.0);
  }

  SUBCASE("printed formula on the unit-box instance") {
    std::vector<std::pair<double, double>> unit(25, {-1.0, 1.0});
    const NormBound b = tau_original(unit, RiskBudget{0.05, 0.05, 0.01}, 25);
    const double expected = 1.0 + std::sqrt(std::log(0.05) / (-50.0)) + 0.01;
    CHECK(b.tau == doctest::Approx(expected).epsilon(1e-14));
    CHECK(b.tau == doctest::Approx(1.2547746830680817).epsilon(1e-12));
    CHECK(b.method == BoundMethod::Original);
    CHECK(b.xi_or_mean == doctest::Approx(1.0));
    CHECK(b.delta0 == doctest::Approx(0.01));
    CHECK(b.tau == doctest::Approx(b.xi_or_mean + b.hoeffding_term + b.delta0));
  }

  SUBCASE("budget validation") {
    std::vector<std::pair<double, double>> unit(4, {-1.0, 1.0});
    CHECK_THROWS(tau_original(unit, RiskBudget{0.0, 0.05, 0.01}, 4));
    CHECK_THROWS(tau_original(unit, RiskBudget{0.6, 0.5, 0.01}, 4));
    CHECK_THROWS(tau_original(unit, RiskBudget{0.05, 0.05, -0.1}, 4));
    CHECK_THROWS(tau_original(unit, RiskBudget{0.05, 0.05, 0.01}, 5));
  }
}

TEST_CASE("xi_star solves the norm maximization") {
  SUBCASE("unit ball maximum is 1/d") {
    const Eigen::Index d = 5;
    const double xi = xi_star(
        value_ellipsoid(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d)), d);
    CHECK(xi == doctest::Approx(1.0 / static_cast<double>(d)).epsilon(1e-9));
  }

  SUBCASE("radius scaling") {
    const Eigen::Index d = 4;
    const double r = 2.5;
    const double xi = xi_star(
        value_ellipsoid(Eigen::VectorXd::Zero(d),
                        Eigen::MatrixXd::Identity(d, d) / (r * r)),
        d);
    CHECK(xi == doctest::Approx(r * r / static_cast<double>(d)).epsilon(1e-9));
  }

  SUBCASE("matches the eigenvalue-based primal oracle") {
    Rng rng(21);
    for (int rep = 0; rep < 12; ++rep) {
      const Eigen::VectorXd c = random_vector(3, rng);
      const Eigen::MatrixXd a = random_spd(3, rng, 0.2, 3.0);
      const double xi = xi_star(value_ellipsoid(c, a), 3);
      const double primal = testsupport::max_norm_sq_over_ellipsoid(a, c) / 3.0;
      CHECK(xi == doctest::Approx(primal).epsilon(1e-6));
    }
  }

  SUBCASE("matches the dense rho-grid oracle") {
    Rng rng(27);
    for (int rep = 0; rep < 6; ++rep) {
      const Eigen::VectorXd c = random_vector(3, rng);
      const Eigen::MatrixXd a = random_spd(3, rng, 0.2, 3.0);
      const double xi = xi_star(value_ellipsoid(c, a), 3);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
      const Eigen::VectorXd b1 = -(a * c);
      const Eigen::VectorXd beta = es.eigenvectors().transpose() * b1;
      const double c1 = c.dot(a * c) - 1.0;
      const double grid =
          testsupport::spectral_grid_oracle(es.eigenvalues(), beta, c1, 1.0 / 3.0, 60000);
      CHECK(xi == doctest::Approx(grid).epsilon(1e-4));
    }
  }

  SUBCASE("center is always feasible") {
    Rng rng(33);
    for (int rep = 0; rep < 10; ++rep) {
      const Eigen::VectorXd c = random_vector(4, rng, 2.0);
      const Eigen::MatrixXd a = random_spd(4, rng, 0.3, 2.0);
      const double xi = xi_star(value_ellipsoid(c, a), 4);
      CHECK(xi >= c.squaredNorm() / 4.0 - 1e-9);
    }
  }

  SUBCASE("an unbounded value set is rejected") {
    Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(xi_star(value_ellipsoid(Eigen::VectorXd::Zero(2), singular), 2),
                    InfeasibleDual);
  }
}

TEST_CASE("refined norm bound") {
  SUBCASE("zero maximum leaves the concentration and leakage terms") {
    const NormBound b = tau_refined(0.0, RiskBudget{0.05, 0.05, 0.01}, 20);
    CHECK(b.tau == doctest::Approx(hoeffding_term(0.05, 20) + 0.01).epsilon(1e-14));
    CHECK(b.method == BoundMethod::Refined);
  }

  SUBCASE("negative xi is rejected") {
    CHECK_THROWS(tau_refined(-0.5, RiskBudget{0.05, 0.05, 0.01}, 20));
  }

  SUBCASE("refined never exceeds the original built from the same ellipsoid") {
    Rng rng(39);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(4));
      const Ellipsoid e = value_ellipsoid(random_vector(d, rng), random_spd(d, rng, 0.1, 2.0));
      const RiskBudget budget{0.05, 0.05, 0.01};
      const auto ivs = pointwise_intervals(e);
      const NormBound tau = tau_original(ivs, budget, d);
      const NormBound tau0 = tau_refined(xi_star(e, d), budget, d);
      CHECK(tau0.tau <= tau.tau + 1e-8);
    }
  }
}

TEST_CASE("hoeffding term decreases in d") {
  for (Eigen::Index d = 1; d < 60; ++d) {
    CHECK(hoeffding_term(0.05, d) > hoeffding_term(0.05, d + 1));
  }
  CHECK(hoeffding_term(0.05, 25) == doctest::Approx(0.24477468306808164).epsilon(1e-14));
}
