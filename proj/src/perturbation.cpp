#include "kband/perturbation.hpp"

#include <numeric>
#include <stdexcept>

#include "kband/errors.hpp"

namespace kband {

Eigen::VectorXd GroupElement::apply(const Eigen::VectorXd& r) const {
  Eigen::VectorXd w = r;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    w[static_cast<Eigen::Index>(j)] = sign[j] * r[perm[j]];
  }
  return w;
}

Eigen::MatrixXd GroupElement::apply_rows(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd w = m;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    w.row(static_cast<Eigen::Index>(j)) = sign[j] * m.row(perm[j]);
  }
  return w;
}

GroupElement GroupElement::compose(const GroupElement& other) const {
  GroupElement out;
  out.ambient = ambient;
  out.perm.resize(perm.size());
  out.sign.resize(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.perm[i] = other.perm[static_cast<std::size_t>(perm[i])];
    out.sign[i] = sign[i] * other.sign[static_cast<std::size_t>(perm[i])];
  }
  return out;
}

bool GroupElement::is_identity() const {
  for (std::size_t j = 0; j < perm.size(); ++j) {
    if (perm[j] != static_cast<Eigen::Index>(j) || sign[j] != 1) return false;
  }
  return true;
}

Eigen::MatrixXd GroupElement::dense() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(ambient, ambient);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    g.row(static_cast<Eigen::Index>(j)).setZero();
    g(static_cast<Eigen::Index>(j), perm[j]) = sign[j];
  }
  return g;
}

GroupElement GroupElement::identity(Eigen::Index restriction, Eigen::Index ambient) {
  GroupElement g;
  g.ambient = ambient;
  g.perm.resize(static_cast<std::size_t>(restriction));
  g.sign.assign(static_cast<std::size_t>(restriction), 1);
  std::iota(g.perm.begin(), g.perm.end(), Eigen::Index{0});
  return g;
}

GroupElement sample_group_element(const PerturbationGroup& group, Eigen::Index n_prime, Rng& rng) {
  if (group.restriction < 1 || group.restriction > n_prime) {
    throw std::invalid_argument("sample_group_element: restriction must be in [1, n']");
  }
  GroupElement g = GroupElement::identity(group.restriction, n_prime);
  if (group.kind == GroupKind::SignChange) {
    for (auto& s : g.sign) s = (rng.next_u64() & 1ULL) ? 1 : -1;
  } else {
    for (std::size_t j = g.perm.size(); j > 1; --j) {
      const std::size_t k = static_cast<std::size_t>(rng.below(j));
      std::swap(g.perm[j - 1], g.perm[k]);
    }
  }
  return g;
}

KgpProblem build_kgp_regression(const GramPack& gp, double lambda_reg, const Eigen::VectorXd& y) {
  if (lambda_reg < 0.0) throw NegativeLambda("lambda_reg must be nonnegative");
  if (gp.d < 1) throw std::invalid_argument("build_kgp_regression: GramPack::with_d not applied");
  if (y.size() != gp.n()) throw std::invalid_argument("build_kgp_regression: y length mismatch");

  KgpProblem p;
  if (lambda_reg == 0.0) {
    p.phi = gp.K1;
    p.v = y;
    return p;
  }
  const Eigen::MatrixXd root = spd_sqrt(gp.K2, gp.params.spectral_floor());
  p.phi.resize(gp.n() + gp.d, gp.d);
  p.phi.topRows(gp.n()) = gp.K1;
  p.phi.bottomRows(gp.d) = std::sqrt(lambda_reg) * root;
  p.v.setZero(gp.n() + gp.d);
  p.v.head(gp.n()) = y;
  return p;
}

EvaluationContext EvaluationContext::create(Eigen::MatrixXd phi, Eigen::VectorXd v,
                                            PerturbationGroup group, int m, int q,
                                            std::uint64_t seed, double ridge_rel) {
  if (m < 2) throw std::invalid_argument("EvaluationContext: m must be at least 2");
  if (q < 1 || q >= m) throw std::invalid_argument("EvaluationContext: need 0 < q < m");
  if (phi.rows() != v.size()) throw std::invalid_argument("EvaluationContext: Phi/v mismatch");
  if (group.restriction > phi.rows()) {
    throw std::invalid_argument("EvaluationContext: restriction exceeds n'");
  }
  if (ridge_rel < 0.0) throw std::invalid_argument("EvaluationContext: ridge must be nonnegative");

  EvaluationContext ctx;
  ctx.phi_ = std::move(phi);
  ctx.v_ = std::move(v);
  ctx.m_ = m;
  ctx.q_ = q;
  ctx.group_ = group;
  ctx.seed_ = seed;

  Rng rng(seed);
  ctx.elements_.reserve(static_cast<std::size_t>(m));
  ctx.elements_.push_back(GroupElement::identity(group.restriction, ctx.phi_.rows()));
  for (int i = 1; i < m; ++i) {
    ctx.elements_.push_back(sample_group_element(group, ctx.phi_.rows(), rng));
  }

  Eigen::MatrixXd gramian = ctx.phi_.transpose() * ctx.phi_;
  ctx.ridge_abs_ = ridge_rel * (gramian.rows() > 0 ? gramian.diagonal().cwiseAbs().mean() : 0.0);
  gramian.diagonal().array() += ctx.ridge_abs_;
  const ClampedEigen eig = clamped_eigen(gramian, default_spectral_floor(gramian));
  ctx.psi_ = eig.inverse();
  ctx.psi_sqrt_ = eig.inverse_sqrt();
  ctx.rn_ = gramian / static_cast<double>(ctx.phi_.rows());
  ctx.theta_hat_ = eig.solve(Eigen::VectorXd(ctx.phi_.transpose() * ctx.v_));
  return ctx;
}

const GroupElement& EvaluationContext::element(int i) const {
  return elements_.at(static_cast<std::size_t>(i));
}

double EvaluationContext::evaluation_function(int i, const Eigen::VectorXd& theta) const {
  if (i < 0 || i >= m_) throw std::invalid_argument("evaluation_function: index out of range");
  Eigen::VectorXd r = v_ - phi_ * theta;
  if (i > 0) r = elements_[static_cast<std::size_t>(i)].apply(r);
  return (psi_sqrt_ * (phi_.transpose() * r)).squaredNorm();
}

int EvaluationContext::rank_index(const Eigen::VectorXd& theta, Rng& rng) const {
  std::vector<double> z(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) z[static_cast<std::size_t>(i)] = evaluation_function(i, theta);

  // Uniform random total order over indices, drawn once per query.
  std::vector<int> order(static_cast<std::size_t>(m_));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t j = order.size(); j > 1; --j) {
    std::swap(order[j - 1], order[static_cast<std::size_t>(rng.below(j))]);
  }
  std::vector<int> tie_rank(static_cast<std::size_t>(m_));
  for (int pos = 0; pos < m_; ++pos) tie_rank[static_cast<std::size_t>(order[pos])] = pos;

  int below = 0;
  for (int i = 1; i < m_; ++i) {
    const double zi = z[static_cast<std::size_t>(i)];
    if (zi < z[0] || (zi == z[0] && tie_rank[static_cast<std::size_t>(i)] < tie_rank[0])) ++below;
  }
  return 1 + below;
}

double EvaluationContext::normalized_rank(const Eigen::VectorXd& theta, Rng& rng) const {
  return static_cast<double>(rank_index(theta, rng)) / static_cast<double>(m_);
}

bool EvaluationContext::sps_membership(const Eigen::VectorXd& theta, Rng& rng) const {
  return rank_index(theta, rng) <= m_ - q_;
}

}  // namespace kband
