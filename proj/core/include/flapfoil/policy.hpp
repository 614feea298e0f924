#ifndef FLAPFOIL_POLICY_HPP_
#define FLAPFOIL_POLICY_HPP_

#include <array>
#include <cstdint>
#include <string>

#include "flapfoil/nn.hpp"

namespace flapfoil {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct PolicyArch {
  int input = 3;
  int lstm = 64;
  int trunk = 128;
  int actions = 2;
  double log_std_init = -0.5;

  std::string tag() const;
};

struct ValueArch {
  int input = 3;
  int lstm = 128;
  int trunk = 128;

  std::string tag() const;
};

// Recurrent actor with a state-independent log standard deviation and the
// auxiliary value head used by the distillation phase.
class PolicyNet {
 public:
  struct Output {
    nn::Mat mean;     // actions x B
    nn::Vec log_std;  // actions, clamped
    nn::Mat aux;      // 1 x B
  };
  struct Cache {
    nn::Lstm::Cache lstm;
    nn::Mat h;       // lstm output
    nn::Mat hidden;  // tanh trunk output
  };

  explicit PolicyNet(PolicyArch arch = {});

  void init(std::uint64_t seed);
  Output forward(const nn::Mat& x, nn::Index steps, Cache* cache = nullptr) const;
  // Accumulates into params.grads. d_log_std is with respect to the clamped
  // value; it is passed through only where the clamp is inactive.
  void backward(const Cache& cache, const nn::Mat& d_mean,
                const nn::Vec& d_log_std, const nn::Mat& d_aux);

  const PolicyArch& arch() const { return arch_; }
  nn::ParamSet params;

  int mean_weight_block() const { return head_mean_.weight(); }
  int mean_bias_block() const { return head_mean_.bias(); }
  int log_std_block() const { return log_std_; }

 private:
  PolicyArch arch_;
  nn::Lstm lstm_;
  nn::Dense trunk_;
  nn::Dense head_mean_;
  nn::Dense head_aux_;
  int log_std_ = -1;
};

class ValueNet {
 public:
  struct Cache {
    nn::Lstm::Cache lstm;
    nn::Mat h;
    nn::Mat hidden;
  };

  explicit ValueNet(ValueArch arch = {});

  void init(std::uint64_t seed);
  nn::Mat forward(const nn::Mat& x, nn::Index steps, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const nn::Mat& d_value);

  const ValueArch& arch() const { return arch_; }
  nn::ParamSet params;

 private:
  ValueArch arch_;
  nn::Lstm lstm_;
  nn::Dense trunk_;
  nn::Dense head_;
};

// Diagonal Gaussian in the pre-squash space; actions are tanh(u).
struct SquashedSample {
  std::array<double, 2> u{};
  std::array<double, 2> raw{};
  double log_prob = 0.0;  // density of raw, including the tanh correction
};

double gaussian_log_prob(const double* u, const double* mean,
                         const double* log_std, int dim);
// log |d tanh(u) / du| summed over components, computed stably.
double tanh_log_det(const double* u, int dim);
double squashed_log_prob(const double* raw, const double* mean,
                         const double* log_std, int dim);
SquashedSample sample_action(const double* mean, const double* log_std,
                             Rng& rng);
// KL(old || new) between diagonal Gaussians.
double gaussian_kl(const double* mean_old, const double* log_std_old,
                   const double* mean_new, const double* log_std_new, int dim);

}  // namespace flapfoil

#endif  // FLAPFOIL_POLICY_HPP_
