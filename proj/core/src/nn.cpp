#include "flapfoil/nn.hpp"

#include <cmath>

#include "flapfoil/errors.hpp"

namespace flapfoil::nn {

int ParamSet::add(std::string name, Index rows, Index cols) {
  if (values.size() != 0) throw Error("ParamSet::add after allocate()");
  blocks_.push_back({std::move(name), total_, rows, cols});
  total_ += rows * cols;
  return static_cast<int>(blocks_.size() - 1);
}

void ParamSet::allocate() {
  values = Vec::Zero(total_);
  grads = Vec::Zero(total_);
}

Eigen::Map<Mat> ParamSet::value(int block) {
  const auto& b = blocks_[static_cast<std::size_t>(block)];
  return {values.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<const Mat> ParamSet::value(int block) const {
  const auto& b = blocks_[static_cast<std::size_t>(block)];
  return {values.data() + b.offset, b.rows, b.cols};
}

Eigen::Map<Mat> ParamSet::grad(int block) {
  const auto& b = blocks_[static_cast<std::size_t>(block)];
  return {grads.data() + b.offset, b.rows, b.cols};
}

void init_orthogonal(ParamSet& ps, int block, double gain, Rng& rng) {
  auto w = ps.value(block);
  const Index rows = w.rows();
  const Index cols = w.cols();
  const Index big = std::max(rows, cols);
  const Index small = std::min(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat a(big, small);
  for (Index j = 0; j < small; ++j)
    for (Index i = 0; i < big; ++i) a(i, j) = normal(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ() * Mat::Identity(big, small);
  // Sign fix so the decomposition is unique.
  const Mat r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (Index j = 0; j < small; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  if (rows >= cols)
    w = gain * q;
  else
    w = gain * q.transpose();
}

Dense::Dense(ParamSet& ps, const std::string& name, Index in, Index out)
    : w_(ps.add(name + ".weight", out, in)),
      b_(ps.add(name + ".bias", out, 1)),
      in_(in),
      out_(out) {}

Mat Dense::forward(const ParamSet& ps, const Mat& x) const {
  Mat y = ps.value(w_) * x;
  y.colwise() += ps.value(b_).col(0);
  return y;
}

Mat Dense::backward(ParamSet& ps, const Mat& x, const Mat& dy,
                    bool want_dx) const {
  ps.grad(w_).noalias() += dy * x.transpose();
  ps.grad(b_).col(0) += dy.rowwise().sum();
  if (!want_dx) return {};
  return ps.value(w_).transpose() * dy;
}

Lstm::Lstm(ParamSet& ps, const std::string& name, Index in, Index hidden)
    : w_(ps.add(name + ".w_input", 4 * hidden, in)),
      u_(ps.add(name + ".w_recurrent", 4 * hidden, hidden)),
      b_(ps.add(name + ".bias", 4 * hidden, 1)),
      in_(in),
      hidden_(hidden) {}

namespace {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& z) {
  return 1.0 / (1.0 + (-z).exp());
}

}  // namespace

Mat Lstm::forward(const ParamSet& ps, const Mat& x, Index steps,
                  Cache* cache) const {
  if (steps <= 0 || x.cols() % steps != 0 || x.rows() != in_)
    throw Error("Lstm::forward: input shape does not match sequence length");
  const Index batch = x.cols() / steps;
  const Index hd = hidden_;
  const auto u = ps.value(u_);

  Mat z = ps.value(w_) * x;
  z.colwise() += ps.value(b_).col(0);

  Mat h = Mat::Zero(hd, batch);
  Mat c = Mat::Zero(hd, batch);
  if (cache) {
    cache->steps = steps;
    cache->batch = batch;
    cache->x = x;
    cache->gates.resize(4 * hd, steps * batch);
    cache->c.resize(hd, steps * batch);
    cache->h.resize(hd, steps * batch);
  }
  Mat zt(4 * hd, batch);
  for (Index t = 0; t < steps; ++t) {
    zt = z.middleCols(t * batch, batch);
    if (t > 0) zt.noalias() += u * h;
    const auto i = sigmoid(zt.topRows(hd).array()).eval();
    const auto f = sigmoid(zt.middleRows(hd, hd).array()).eval();
    const auto g = zt.middleRows(2 * hd, hd).array().tanh().eval();
    const auto o = sigmoid(zt.bottomRows(hd).array()).eval();
    c = (f * c.array() + i * g).matrix();
    h = (o * c.array().tanh()).matrix();
    if (cache) {
      auto gt = cache->gates.middleCols(t * batch, batch);
      gt.topRows(hd) = i.matrix();
      gt.middleRows(hd, hd) = f.matrix();
      gt.middleRows(2 * hd, hd) = g.matrix();
      gt.bottomRows(hd) = o.matrix();
      cache->c.middleCols(t * batch, batch) = c;
      cache->h.middleCols(t * batch, batch) = h;
    }
  }
  return h;
}

void Lstm::backward(ParamSet& ps, const Cache& cache, const Mat& dh_last) const {
  const Index steps = cache.steps;
  const Index batch = cache.batch;
  const Index hd = hidden_;
  const auto u = ps.value(u_);

  Mat dz(4 * hd, steps * batch);
  Mat dh = dh_last;
  Mat dc = Mat::Zero(hd, batch);
  for (Index t = steps - 1; t >= 0; --t) {
    const auto gt = cache.gates.middleCols(t * batch, batch);
    const auto i = gt.topRows(hd).array();
    const auto f = gt.middleRows(hd, hd).array();
    const auto g = gt.middleRows(2 * hd, hd).array();
    const auto o = gt.bottomRows(hd).array();
    const auto tc = cache.c.middleCols(t * batch, batch).array().tanh().eval();

    dc.array() += dh.array() * o * (1.0 - tc.square());
    auto dzt = dz.middleCols(t * batch, batch);
    dzt.bottomRows(hd) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dzt.topRows(hd) = (dc.array() * g * i * (1.0 - i)).matrix();
    dzt.middleRows(2 * hd, hd) = (dc.array() * i * (1.0 - g.square())).matrix();
    if (t > 0) {
      const auto c_prev = cache.c.middleCols((t - 1) * batch, batch).array();
      dzt.middleRows(hd, hd) = (dc.array() * c_prev * f * (1.0 - f)).matrix();
      dc = (dc.array() * f).matrix();
      dh.noalias() = u.transpose() * dzt;
    } else {
      dzt.middleRows(hd, hd).setZero();
    }
  }
  ps.grad(w_).noalias() += dz * cache.x.transpose();
  ps.grad(b_).col(0) += dz.rowwise().sum();
  if (steps > 1) {
    ps.grad(u_).noalias() +=
        dz.rightCols((steps - 1) * batch) *
        cache.h.leftCols((steps - 1) * batch).transpose();
  }
}

Adam::Adam(Index size, AdamConfig c)
    : m(Vec::Zero(size)), v(Vec::Zero(size)), cfg(c) {}

void Adam::step(Vec& params, const Vec& grads) {
  ++t;
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grads.cwiseProduct(grads);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const double step = cfg.lr / bc1;
  params.array() -=
      step * m.array() / ((v.array() / bc2).sqrt() + cfg.eps);
}

}  // namespace flapfoil::nn
