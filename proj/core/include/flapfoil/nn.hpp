#ifndef FLAPFOIL_NN_HPP_
#define FLAPFOIL_NN_HPP_

// Small dense / LSTM layers over a flat parameter vector, with hand-written
// reverse passes. Batches are column-major: one column per sequence.
// Sequences of length T are laid out time-major, column t * B + b.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flapfoil/hydro.hpp"

namespace flapfoil::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

struct ParamBlock {
  std::string name;
  Index offset = 0;
  Index rows = 0;
  Index cols = 0;
};

// Named blocks packed in declaration order into `values`; `grads` mirrors it.
class ParamSet {
 public:
  int add(std::string name, Index rows, Index cols);
  void allocate();

  Eigen::Map<Mat> value(int block);
  Eigen::Map<const Mat> value(int block) const;
  Eigen::Map<Mat> grad(int block);

  void zero_grad() { grads.setZero(); }
  Index size() const { return values.size(); }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  Vec values;
  Vec grads;

 private:
  std::vector<ParamBlock> blocks_;
  Index total_ = 0;
};

// Fills a block with an orthogonal-style matrix scaled by `gain`
// (QR of a Gaussian matrix).
void init_orthogonal(ParamSet& ps, int block, double gain, Rng& rng);

class Dense {
 public:
  Dense() = default;
  Dense(ParamSet& ps, const std::string& name, Index in, Index out);

  // y = W x + b
  Mat forward(const ParamSet& ps, const Mat& x) const;
  // Accumulates parameter gradients; returns dL/dx when want_dx.
  Mat backward(ParamSet& ps, const Mat& x, const Mat& dy, bool want_dx) const;

  int weight() const { return w_; }
  int bias() const { return b_; }
  Index in() const { return in_; }
  Index out() const { return out_; }

 private:
  int w_ = -1;
  int b_ = -1;
  Index in_ = 0;
  Index out_ = 0;
};

// Single-layer LSTM with gate order (input, forget, cell, output), run from a
// zero state; the last hidden state is the output.
class Lstm {
 public:
  struct Cache {
    Index steps = 0;
    Index batch = 0;
    Mat x;      // in x (T * B)
    Mat gates;  // 4H x (T * B), post-activation
    Mat c;      // H x (T * B)
    Mat h;      // H x (T * B)
  };

  Lstm() = default;
  Lstm(ParamSet& ps, const std::string& name, Index in, Index hidden);

  Mat forward(const ParamSet& ps, const Mat& x, Index steps,
              Cache* cache = nullptr) const;
  void backward(ParamSet& ps, const Cache& cache, const Mat& dh_last) const;

  int input_weight() const { return w_; }
  int recurrent_weight() const { return u_; }
  int bias() const { return b_; }
  Index hidden() const { return hidden_; }

 private:
  int w_ = -1;
  int u_ = -1;
  int b_ = -1;
  Index in_ = 0;
  Index hidden_ = 0;
};

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(Index size, AdamConfig cfg);

  void step(Vec& params, const Vec& grads);

  Vec m;
  Vec v;
  std::int64_t t = 0;
  AdamConfig cfg;
};

}  // namespace flapfoil::nn

#endif  // FLAPFOIL_NN_HPP_
