#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kband/kernel.hpp"
#include "kband/linalg.hpp"
#include "kband/rng.hpp"

namespace kband {

enum class GroupKind { SignChange, Permutation };

/// Compact matrix group used for distributional invariance. Only the first
/// `restriction` residual coordinates are transformed; the rest see the
/// identity.
struct PerturbationGroup {
  GroupKind kind = GroupKind::Permutation;
  Eigen::Index restriction = 0;
};

/// One sampled group element, stored as a signed permutation of the first
/// `restriction` coordinates of an `ambient`-dimensional vector.
struct GroupElement {
  std::vector<Eigen::Index> perm;  // w[j] = sign[j] * r[perm[j]] for j < perm.size()
  std::vector<int> sign;
  Eigen::Index ambient = 0;

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
  /// Row-wise action G * M.
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& m) const;
  GroupElement compose(const GroupElement& other) const;  // this * other
  bool is_identity() const;
  Eigen::MatrixXd dense() const;

  static GroupElement identity(Eigen::Index restriction, Eigen::Index ambient);
};

/// Uniform draw from the group: fair signs for SignChange, Fisher-Yates for
/// Permutation.
GroupElement sample_group_element(const PerturbationGroup& group, Eigen::Index n_prime, Rng& rng);

/// Least-squares data of the regularized kernel regression.
/// lambda > 0 stacks sqrt(lambda) K2^{1/2} under K1 and d zeros under y.
struct KgpProblem {
  Eigen::MatrixXd phi;
  Eigen::VectorXd v;
};

KgpProblem build_kgp_regression(const GramPack& gp, double lambda_reg, const Eigen::VectorXd& y);

/// Coefficients whose induced function matches the target at the first d
/// inputs; only computable in synthetic experiments.
struct IdealVector {
  Eigen::VectorXd theta_tilde;
};

/// Immutable data of the perturbed evaluation functions
///   Z_i(theta) = || Psi^{1/2} Phi' G_i (v - Phi theta) ||^2 .
/// Group elements G_1..G_{m-1} are sampled once at construction (G_0 = I) and
/// reused across every query, so the acceptance region is well defined.
/// Rank and membership queries take an explicit RNG for tie-breaking.
///
/// `ridge_rel` adds ridge_rel * mean(diag(Phi'Phi)) to the Gramian before
/// inverting. Exactness of the rank test holds for any fixed weighting; the
/// ridge additionally keeps the outer-approximation programs bounded when the
/// design admits directions invariant under the restricted group (always the
/// case for the kernel regression blocks).
class EvaluationContext {
 public:
  static EvaluationContext create(Eigen::MatrixXd phi, Eigen::VectorXd v, PerturbationGroup group,
                                  int m, int q, std::uint64_t seed, double ridge_rel = 0.0);

  double evaluation_function(int i, const Eigen::VectorXd& theta) const;

  /// Ascending rank of Z_0 among all Z_i, in {1, ..., m}; ties broken by a
  /// uniform random total order drawn once per call.
  int rank_index(const Eigen::VectorXd& theta, Rng& rng) const;
  double normalized_rank(const Eigen::VectorXd& theta, Rng& rng) const;
  /// true iff normalized_rank <= 1 - q/m (integer-exact).
  bool sps_membership(const Eigen::VectorXd& theta, Rng& rng) const;

  double confidence() const { return 1.0 - static_cast<double>(q_) / m_; }

  const Eigen::MatrixXd& phi() const { return phi_; }
  const Eigen::VectorXd& v() const { return v_; }
  const Eigen::MatrixXd& psi() const { return psi_; }
  const Eigen::MatrixXd& psi_sqrt() const { return psi_sqrt_; }
  /// (Phi'Phi + ridge I)/n'; equals Phi'Phi/n' when ridge_rel is zero.
  const Eigen::MatrixXd& rn() const { return rn_; }
  double ridge_abs() const { return ridge_abs_; }
  const Eigen::VectorXd& theta_hat() const { return theta_hat_; }
  int m() const { return m_; }
  int q() const { return q_; }
  const PerturbationGroup& group() const { return group_; }
  /// Element i in [0, m); index 0 is the identity.
  const GroupElement& element(int i) const;
  std::uint64_t rng_seed() const { return seed_; }
  Eigen::Index n_prime() const { return phi_.rows(); }
  Eigen::Index dim() const { return phi_.cols(); }

 private:
  EvaluationContext() = default;

  Eigen::MatrixXd phi_;
  Eigen::VectorXd v_;
  Eigen::MatrixXd psi_;
  Eigen::MatrixXd psi_sqrt_;
  Eigen::MatrixXd rn_;
  Eigen::VectorXd theta_hat_;
  int m_ = 0;
  int q_ = 0;
  PerturbationGroup group_;
  std::vector<GroupElement> elements_;  // size m, [0] = identity
  std::uint64_t seed_ = 0;
  double ridge_abs_ = 0.0;
};

}  // namespace kband
