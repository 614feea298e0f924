#include "flapfoil/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "flapfoil/errors.hpp"

namespace flapfoil {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

}  // namespace

std::string PolicyArch::tag() const {
  return "policy:lstm" + std::to_string(lstm) + "-dense" +
         std::to_string(trunk) + "-in" + std::to_string(input) + "-act" +
         std::to_string(actions);
}

std::string ValueArch::tag() const {
  return "value:lstm" + std::to_string(lstm) + "-dense" +
         std::to_string(trunk) + "-in" + std::to_string(input);
}

PolicyNet::PolicyNet(PolicyArch arch) : arch_(arch) {
  lstm_ = nn::Lstm(params, "policy.lstm", arch.input, arch.lstm);
  trunk_ = nn::Dense(params, "policy.trunk", arch.lstm, arch.trunk);
  head_mean_ = nn::Dense(params, "policy.mean", arch.trunk, arch.actions);
  log_std_ = params.add("policy.log_std", arch.actions, 1);
  head_aux_ = nn::Dense(params, "policy.aux_value", arch.trunk, 1);
  params.allocate();
}

void PolicyNet::init(std::uint64_t seed) {
  Rng rng(seed);
  params.values.setZero();
  nn::init_orthogonal(params, lstm_.input_weight(), 1.0, rng);
  nn::init_orthogonal(params, lstm_.recurrent_weight(), 1.0, rng);
  nn::init_orthogonal(params, trunk_.weight(), std::sqrt(2.0), rng);
  nn::init_orthogonal(params, head_mean_.weight(), 0.01, rng);
  nn::init_orthogonal(params, head_aux_.weight(), 1.0, rng);
  params.value(log_std_).setConstant(arch_.log_std_init);
}

PolicyNet::Output PolicyNet::forward(const nn::Mat& x, nn::Index steps,
                                     Cache* cache) const {
  Output out;
  nn::Mat h = lstm_.forward(params, x, steps, cache ? &cache->lstm : nullptr);
  nn::Mat hidden = trunk_.forward(params, h).array().tanh().matrix();
  out.mean = head_mean_.forward(params, hidden);
  out.aux = head_aux_.forward(params, hidden);
  out.log_std = params.value(log_std_).col(0).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  if (cache) {
    cache->h = std::move(h);
    cache->hidden = std::move(hidden);
  }
  return out;
}

void PolicyNet::backward(const Cache& cache, const nn::Mat& d_mean,
                         const nn::Vec& d_log_std, const nn::Mat& d_aux) {
  nn::Mat d_hidden = head_mean_.backward(params, cache.hidden, d_mean, true);
  d_hidden += head_aux_.backward(params, cache.hidden, d_aux, true);
  const nn::Mat d_pre =
      (d_hidden.array() * (1.0 - cache.hidden.array().square())).matrix();
  const nn::Mat d_h = trunk_.backward(params, cache.h, d_pre, true);
  lstm_.backward(params, cache.lstm, d_h);

  const auto raw = params.value(log_std_);
  auto g = params.grad(log_std_);
  for (nn::Index i = 0; i < raw.rows(); ++i)
    if (raw(i, 0) > kLogStdMin && raw(i, 0) < kLogStdMax) g(i, 0) += d_log_std(i);
}

ValueNet::ValueNet(ValueArch arch) : arch_(arch) {
  lstm_ = nn::Lstm(params, "value.lstm", arch.input, arch.lstm);
  trunk_ = nn::Dense(params, "value.trunk", arch.lstm, arch.trunk);
  head_ = nn::Dense(params, "value.head", arch.trunk, 1);
  params.allocate();
}

void ValueNet::init(std::uint64_t seed) {
  Rng rng(seed);
  params.values.setZero();
  nn::init_orthogonal(params, lstm_.input_weight(), 1.0, rng);
  nn::init_orthogonal(params, lstm_.recurrent_weight(), 1.0, rng);
  nn::init_orthogonal(params, trunk_.weight(), std::sqrt(2.0), rng);
  nn::init_orthogonal(params, head_.weight(), 1.0, rng);
}

nn::Mat ValueNet::forward(const nn::Mat& x, nn::Index steps, Cache* cache) const {
  nn::Mat h = lstm_.forward(params, x, steps, cache ? &cache->lstm : nullptr);
  nn::Mat hidden = trunk_.forward(params, h).array().tanh().matrix();
  nn::Mat v = head_.forward(params, hidden);
  if (cache) {
    cache->h = std::move(h);
    cache->hidden = std::move(hidden);
  }
  return v;
}

void ValueNet::backward(const Cache& cache, const nn::Mat& d_value) {
  const nn::Mat d_hidden = head_.backward(params, cache.hidden, d_value, true);
  const nn::Mat d_pre =
      (d_hidden.array() * (1.0 - cache.hidden.array().square())).matrix();
  const nn::Mat d_h = trunk_.backward(params, cache.h, d_pre, true);
  lstm_.backward(params, cache.lstm, d_h);
}

double gaussian_log_prob(const double* u, const double* mean,
                         const double* log_std, int dim) {
  double lp = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double z = (u[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

double tanh_log_det(const double* u, int dim) {
  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double x = -2.0 * u[i];
    const double softplus = x > 0.0 ? x + std::log1p(std::exp(-x))
                                    : std::log1p(std::exp(x));
    s += 2.0 * (std::numbers::ln2 - u[i] - softplus);
  }
  return s;
}

double squashed_log_prob(const double* raw, const double* mean,
                         const double* log_std, int dim) {
  double u[8];
  if (dim > 8) throw Error("squashed_log_prob: dimension too large");
  for (int i = 0; i < dim; ++i) {
    if (!(raw[i] > -1.0 && raw[i] < 1.0))
      return -std::numeric_limits<double>::infinity();
    u[i] = std::atanh(raw[i]);
  }
  return gaussian_log_prob(u, mean, log_std, dim) - tanh_log_det(u, dim);
}

SquashedSample sample_action(const double* mean, const double* log_std,
                             Rng& rng) {
  for (int i = 0; i < 2; ++i)
    if (!std::isfinite(mean[i]) || !std::isfinite(log_std[i]))
      throw NumericError("sample_action: non-finite distribution parameters");
  SquashedSample s;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 2; ++i) {
    const double ls = std::clamp(log_std[i], kLogStdMin, kLogStdMax);
    s.u[i] = mean[i] + std::exp(ls) * normal(rng);
    s.raw[i] = std::tanh(s.u[i]);
  }
  double ls[2] = {std::clamp(log_std[0], kLogStdMin, kLogStdMax),
                  std::clamp(log_std[1], kLogStdMin, kLogStdMax)};
  s.log_prob = gaussian_log_prob(s.u.data(), mean, ls, 2) -
               tanh_log_det(s.u.data(), 2);
  return s;
}

double gaussian_kl(const double* mean_old, const double* log_std_old,
                   const double* mean_new, const double* log_std_new, int dim) {
  double kl = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double var_old = std::exp(2.0 * log_std_old[i]);
    const double var_new = std::exp(2.0 * log_std_new[i]);
    const double dm = mean_old[i] - mean_new[i];
    kl += log_std_new[i] - log_std_old[i] + (var_old + dm * dm) / (2.0 * var_new) - 0.5;
  }
  return kl;
}

}  // namespace flapfoil
