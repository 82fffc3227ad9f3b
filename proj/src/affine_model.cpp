#include "gpfel/affine_model.hpp"

#include <cmath>

namespace gpfel {

AffineModel::AffineModel(Mode mode, PosteriorState post, ScalarField m_g, ScalarField g,
                         double eta, KernelPtr kernel_g)
    : mode_(mode),
      post_(std::move(post)),
      m_g_(std::move(m_g)),
      g_(std::move(g)),
      eta_(eta),
      kernel_g_(std::move(kernel_g)) {}

AffineModel AffineModel::unknown_g(KernelPtr kernel_f, KernelPtr kernel_g, ScalarField m_g,
                                   double eta, double noise_variance) {
  if (!m_g) throw ContractViolation("unknown-g model requires a prior mean for g");
  if (!(eta > 0.0)) throw ContractViolation("positivity floor eta must be positive");
  auto compound = std::make_shared<CompoundAffineKernel>(kernel_f, kernel_g);
  Dataset empty;
  empty.noise_variance = noise_variance;
  // Observed sums have prior mean u * m_g(x); the f-component prior is zero.
  PriorMean prior = [m_g](const Eigen::VectorXd& x, double u) { return u * m_g(x); };
  auto post = PosteriorState::fit(std::move(empty), std::move(compound), std::move(prior));
  return AffineModel(Mode::UnknownG, std::move(post), std::move(m_g), nullptr, eta,
                     std::move(kernel_g));
}

AffineModel AffineModel::known_g(KernelPtr kernel_f, ScalarField g, double eta,
                                 double noise_variance) {
  if (!g) throw ContractViolation("known-g model requires the g function");
  if (!(eta > 0.0)) throw ContractViolation("positivity floor eta must be positive");
  Dataset empty;
  empty.noise_variance = noise_variance;
  auto post = PosteriorState::fit(std::move(empty), std::move(kernel_f), zero_mean());
  return AffineModel(Mode::KnownG, std::move(post), nullptr, std::move(g), eta, nullptr);
}

AffineModel AffineModel::with_observation(const Eigen::VectorXd& x, double y,
                                          double u) const {
  const double target = (mode_ == Mode::KnownG) ? y - g_(x) * u : y;
  AffineModel out = *this;
  out.post_ = post_.add_point(x, target, u);
  return out;
}

AffineModel AffineModel::with_dataset(Dataset dataset) const {
  AffineModel out = *this;
  out.post_ = PosteriorState::fit(std::move(dataset), post_.kernel(), post_.prior_mean());
  return out;
}

AffineModel AffineModel::with_log_params(const Eigen::VectorXd& lp) const {
  AffineModel out = *this;
  KernelPtr kernel = post_.kernel()->with_log_params(lp);
  if (mode_ == Mode::UnknownG) {
    auto compound = std::dynamic_pointer_cast<const CompoundAffineKernel>(kernel);
    out.kernel_g_ = compound->kernel_g();
  }
  out.post_ = PosteriorState::fit(post_.dataset(), std::move(kernel), post_.prior_mean());
  return out;
}

FgEstimate AffineModel::predict_fg(const Eigen::VectorXd& x) const {
  if (mode_ != Mode::UnknownG) {
    throw ContractViolation("predict_fg requires unknown-g mode");
  }
  FgEstimate est;
  if (post_.empty()) {
    est.f_hat = 0.0;
    est.g_hat = m_g_(x);
  } else {
    auto compound = std::static_pointer_cast<const CompoundAffineKernel>(post_.kernel());
    const Eigen::VectorXd kf = post_.cross_covariance(*compound->kernel_f(), x, 1.0);
    // g-row carries the training-side controls: sum_i u_i k_g(x_i, x) alpha_i
    const ScaledByKnownFunctionKernel scaled_g(kernel_g_);
    const Eigen::VectorXd kg_u = post_.cross_covariance(scaled_g, x, 1.0);
    est.f_hat = kf.dot(post_.alpha());
    est.g_hat = m_g_(x) + kg_u.dot(post_.alpha());
  }
  if (est.g_hat < eta_) {
    est.g_hat = eta_;
    est.g_floored = true;
  }
  return est;
}

double AffineModel::predict_f_known_g(const Eigen::VectorXd& x) const {
  if (mode_ != Mode::KnownG) {
    throw ContractViolation("predict_f_known_g requires known-g mode");
  }
  return post_.predict(x).first;
}

FgEstimate AffineModel::predict(const Eigen::VectorXd& x) const {
  if (mode_ == Mode::UnknownG) return predict_fg(x);
  FgEstimate est;
  est.f_hat = predict_f_known_g(x);
  est.g_hat = g_(x);
  if (est.g_hat < eta_) {
    est.g_hat = eta_;
    est.g_floored = true;
  }
  return est;
}

double AffineModel::predict_variance(const Eigen::VectorXd& x, double u_hypothetical) const {
  const double u = (mode_ == Mode::UnknownG) ? u_hypothetical : 1.0;
  return post_.predict(x, u).second;
}

AffineModel AffineModel::augment_open_loop(const OpenLoopBatch& batch) const {
  if (mode_ != Mode::UnknownG) {
    throw ContractViolation("open-loop fusion requires unknown-g mode");
  }
  if (static_cast<Eigen::Index>(batch.inputs.size()) != batch.targets.size()) {
    throw ContractViolation("open-loop batch size mismatch");
  }
  AffineModel out = *this;
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    out.post_ = out.post_.add_point(batch.inputs[i], batch.targets[i], 0.0);
  }
  return out;
}

SumDecomposition decompose_sum(const PosteriorState& state, const Eigen::VectorXd& x,
                               double u_star) {
  auto sum = std::dynamic_pointer_cast<const SumKernel>(state.kernel());
  if (!sum) throw ContractViolation("decompose_sum requires a Sum kernel posterior");
  SumDecomposition d{};
  const double ka_star = sum->first()->eval(x, x, u_star, u_star);
  const double kb_star = sum->second()->eval(x, x, u_star, u_star);
  d.mean_a = state.prior_mean()(x, u_star);
  d.mean_b = 0.0;
  d.var_a = ka_star;
  d.var_b = kb_star;
  if (!state.empty()) {
    const Eigen::VectorXd ka = state.cross_covariance(*sum->first(), x, u_star);
    const Eigen::VectorXd kb = state.cross_covariance(*sum->second(), x, u_star);
    d.mean_a += ka.dot(state.alpha());
    d.mean_b += kb.dot(state.alpha());
    d.var_a = std::max(ka_star - state.solve_lower(ka).squaredNorm(), 0.0);
    d.var_b = std::max(kb_star - state.solve_lower(kb).squaredNorm(), 0.0);
  }
  return d;
}

double sanitize_positive(double y, double eta) {
  if (!(eta > 0.0)) throw ContractViolation("eta must be positive");
  return std::max(y, eta);
}

}  // namespace gpfel
