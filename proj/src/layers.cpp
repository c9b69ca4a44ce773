#include "layers.hpp"

#include <cmath>
#include <random>

namespace tubecast::layers {

namespace {

using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using Mat = Eigen::Map<Eigen::MatrixXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

void fill_uniform(std::span<double> dst, double limit, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : dst) v = dist(gen);
}

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

template <class Derived>
Eigen::MatrixXd relu_mask(const Eigen::MatrixBase<Derived>& pre) {
  return (pre.array() > 0.0).template cast<double>().matrix();
}

struct DenseCache final : LayerCache {
  Sequence x;
  Sequence pre;
};

struct GruCache final : LayerCache {
  Sequence x;
  Sequence h_prev, r, z, n, gh_n;
};

struct LstmCache final : LayerCache {
  Sequence x;
  Sequence h_prev, c_prev, i, f, g, o, tanh_c;
};

struct ConvCache final : LayerCache {
  Sequence x;
  Sequence pre;
};

struct LastStepCache final : LayerCache {
  std::size_t steps = 0;
  Eigen::Index features = 0;
};

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(int in, int out, Activation act) : in_(in), out_(out), act_(act) {}

std::string Dense::name() const {
  return std::string(act_ == Activation::relu ? "dense_relu" : "dense") + "(" + std::to_string(in_) + "->" +
         std::to_string(out_) + ")";
}

std::size_t Dense::param_count() const { return static_cast<std::size_t>(out_) * (in_ + 1); }

void Dense::init(std::span<double> params, std::uint64_t seed) const {
  std::mt19937_64 gen(seed);
  fill_uniform(params.first(static_cast<std::size_t>(out_) * in_), 1.0 / std::sqrt(in_), gen);
  std::fill(params.begin() + static_cast<std::ptrdiff_t>(out_) * in_, params.end(), 0.0);
}

Sequence Dense::forward(std::span<const double> params, const Sequence& x,
                        std::unique_ptr<LayerCache>& cache) const {
  const ConstMat W(params.data(), out_, in_);
  const ConstVec b(params.data() + static_cast<std::ptrdiff_t>(out_) * in_, out_);
  auto c = std::make_unique<DenseCache>();
  Sequence y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    Eigen::MatrixXd pre = W * x[t];
    pre.colwise() += b;
    y[t] = act_ == Activation::relu ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
    if (act_ == Activation::relu) c->pre.push_back(std::move(pre));
  }
  c->x = x;
  cache = std::move(c);
  return y;
}

Sequence Dense::backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                         std::span<double> grad) const {
  const auto& c = static_cast<const DenseCache&>(cache);
  const ConstMat W(params.data(), out_, in_);
  Mat dW(grad.data(), out_, in_);
  Vec db(grad.data() + static_cast<std::ptrdiff_t>(out_) * in_, out_);
  Sequence dx(dy.size());
  for (std::size_t t = 0; t < dy.size(); ++t) {
    const Eigen::MatrixXd dpre =
        act_ == Activation::relu ? Eigen::MatrixXd(dy[t].cwiseProduct(relu_mask(c.pre[t]))) : dy[t];
    dW.noalias() += dpre * c.x[t].transpose();
    db += dpre.rowwise().sum();
    dx[t].noalias() = W.transpose() * dpre;
  }
  return dx;
}

// ---------------------------------------------------------------- GRU

Gru::Gru(int in, int hidden) : in_(in), hidden_(hidden) {}

std::string Gru::name() const { return "gru(" + std::to_string(in_) + "->" + std::to_string(hidden_) + ")"; }

std::size_t Gru::param_count() const {
  const std::size_t h3 = 3 * static_cast<std::size_t>(hidden_);
  return h3 * in_ + h3 * hidden_ + 2 * h3;
}

void Gru::init(std::span<double> params, std::uint64_t seed) const {
  std::mt19937_64 gen(seed);
  const std::size_t h3 = 3 * static_cast<std::size_t>(hidden_);
  fill_uniform(params.subspan(0, h3 * in_), std::sqrt(3.0 / in_), gen);
  fill_uniform(params.subspan(h3 * in_, h3 * hidden_), std::sqrt(3.0 / hidden_), gen);
  std::fill(params.begin() + static_cast<std::ptrdiff_t>(h3 * (in_ + hidden_)), params.end(), 0.0);
}

Sequence Gru::forward(std::span<const double> params, const Sequence& x,
                      std::unique_ptr<LayerCache>& cache) const {
  const Eigen::Index h = hidden_, h3 = 3 * hidden_;
  const double* p = params.data();
  const ConstMat Wx(p, h3, in_);
  const ConstMat Wh(p + h3 * in_, h3, h);
  const ConstVec bx(p + h3 * in_ + h3 * h, h3);
  const ConstVec bh(p + h3 * in_ + h3 * h + h3, h3);

  const Eigen::Index batch = x.empty() ? 0 : x.front().cols();
  auto c = std::make_unique<GruCache>();
  Sequence y(x.size());
  Eigen::MatrixXd hs = Eigen::MatrixXd::Zero(h, batch);
  for (std::size_t t = 0; t < x.size(); ++t) {
    Eigen::MatrixXd gx = Wx * x[t];
    gx.colwise() += bx;
    Eigen::MatrixXd gh = Wh * hs;
    gh.colwise() += bh;
    Eigen::MatrixXd r = sigmoid(gx.topRows(h).array() + gh.topRows(h).array()).matrix();
    Eigen::MatrixXd z = sigmoid(gx.middleRows(h, h).array() + gh.middleRows(h, h).array()).matrix();
    Eigen::MatrixXd ghn = gh.bottomRows(h);
    Eigen::MatrixXd n = (gx.bottomRows(h).array() + r.array() * ghn.array()).tanh().matrix();
    Eigen::MatrixXd next = ((1.0 - z.array()) * n.array() + z.array() * hs.array()).matrix();

    c->h_prev.push_back(std::move(hs));
    c->r.push_back(std::move(r));
    c->z.push_back(std::move(z));
    c->n.push_back(std::move(n));
    c->gh_n.push_back(std::move(ghn));
    hs = next;
    y[t] = std::move(next);
  }
  c->x = x;
  cache = std::move(c);
  return y;
}

Sequence Gru::backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                       std::span<double> grad) const {
  const auto& c = static_cast<const GruCache&>(cache);
  const Eigen::Index h = hidden_, h3 = 3 * hidden_;
  const double* p = params.data();
  const ConstMat Wx(p, h3, in_);
  const ConstMat Wh(p + h3 * in_, h3, h);
  double* g = grad.data();
  Mat dWx(g, h3, in_);
  Mat dWh(g + h3 * in_, h3, h);
  Vec dbx(g + h3 * in_ + h3 * h, h3);
  Vec dbh(g + h3 * in_ + h3 * h + h3, h3);

  const std::size_t steps = dy.size();
  const Eigen::Index batch = steps == 0 ? 0 : dy.front().cols();
  Sequence dx(steps);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(h, batch);
  Eigen::MatrixXd dgx(h3, batch), dgh(h3, batch);
  for (std::size_t k = steps; k-- > 0;) {
    const Eigen::ArrayXXd dh = (dy[k] + dh_next).array();
    const auto& r = c.r[k].array();
    const auto& z = c.z[k].array();
    const auto& n = c.n[k].array();
    const auto& hp = c.h_prev[k].array();

    const Eigen::ArrayXXd dn = dh * (1.0 - z);
    const Eigen::ArrayXXd dz = dh * (hp - n);
    const Eigen::ArrayXXd dan = dn * (1.0 - n * n);
    const Eigen::ArrayXXd dr = dan * c.gh_n[k].array();

    dgx.topRows(h) = (dr * r * (1.0 - r)).matrix();
    dgx.middleRows(h, h) = (dz * z * (1.0 - z)).matrix();
    dgx.bottomRows(h) = dan.matrix();
    dgh.topRows(h) = dgx.topRows(h);
    dgh.middleRows(h, h) = dgx.middleRows(h, h);
    dgh.bottomRows(h) = (dan * r).matrix();

    dWx.noalias() += dgx * c.x[k].transpose();
    dWh.noalias() += dgh * c.h_prev[k].transpose();
    dbx += dgx.rowwise().sum();
    dbh += dgh.rowwise().sum();
    dx[k].noalias() = Wx.transpose() * dgx;
    dh_next = (dh * z).matrix();
    dh_next.noalias() += Wh.transpose() * dgh;
  }
  return dx;
}

// ---------------------------------------------------------------- LSTM

Lstm::Lstm(int in, int hidden) : in_(in), hidden_(hidden) {}

std::string Lstm::name() const { return "lstm(" + std::to_string(in_) + "->" + std::to_string(hidden_) + ")"; }

std::size_t Lstm::param_count() const {
  const std::size_t h4 = 4 * static_cast<std::size_t>(hidden_);
  return h4 * in_ + h4 * hidden_ + h4;
}

void Lstm::init(std::span<double> params, std::uint64_t seed) const {
  std::mt19937_64 gen(seed);
  const std::size_t h = hidden_, h4 = 4 * h;
  fill_uniform(params.subspan(0, h4 * in_), std::sqrt(3.0 / in_), gen);
  fill_uniform(params.subspan(h4 * in_, h4 * h), std::sqrt(3.0 / hidden_), gen);
  auto bias = params.subspan(h4 * (in_ + h), h4);
  std::fill(bias.begin(), bias.end(), 0.0);
  std::fill(bias.begin() + static_cast<std::ptrdiff_t>(h), bias.begin() + static_cast<std::ptrdiff_t>(2 * h), 1.0);
}

Sequence Lstm::forward(std::span<const double> params, const Sequence& x,
                       std::unique_ptr<LayerCache>& cache) const {
  const Eigen::Index h = hidden_, h4 = 4 * hidden_;
  const double* p = params.data();
  const ConstMat Wx(p, h4, in_);
  const ConstMat Wh(p + h4 * in_, h4, h);
  const ConstVec b(p + h4 * in_ + h4 * h, h4);

  const Eigen::Index batch = x.empty() ? 0 : x.front().cols();
  auto c = std::make_unique<LstmCache>();
  Sequence y(x.size());
  Eigen::MatrixXd hs = Eigen::MatrixXd::Zero(h, batch);
  Eigen::MatrixXd cs = Eigen::MatrixXd::Zero(h, batch);
  for (std::size_t t = 0; t < x.size(); ++t) {
    Eigen::MatrixXd gates = Wx * x[t];
    gates.noalias() += Wh * hs;
    gates.colwise() += b;
    Eigen::MatrixXd i = sigmoid(gates.topRows(h).array()).matrix();
    Eigen::MatrixXd f = sigmoid(gates.middleRows(h, h).array()).matrix();
    Eigen::MatrixXd g = gates.middleRows(2 * h, h).array().tanh().matrix();
    Eigen::MatrixXd o = sigmoid(gates.bottomRows(h).array()).matrix();
    Eigen::MatrixXd c_next = (f.array() * cs.array() + i.array() * g.array()).matrix();
    Eigen::MatrixXd tc = c_next.array().tanh().matrix();
    Eigen::MatrixXd h_next = (o.array() * tc.array()).matrix();

    c->h_prev.push_back(std::move(hs));
    c->c_prev.push_back(std::move(cs));
    c->i.push_back(std::move(i));
    c->f.push_back(std::move(f));
    c->g.push_back(std::move(g));
    c->o.push_back(std::move(o));
    c->tanh_c.push_back(std::move(tc));
    hs = h_next;
    cs = std::move(c_next);
    y[t] = std::move(h_next);
  }
  c->x = x;
  cache = std::move(c);
  return y;
}

Sequence Lstm::backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                        std::span<double> grad) const {
  const auto& c = static_cast<const LstmCache&>(cache);
  const Eigen::Index h = hidden_, h4 = 4 * hidden_;
  const double* p = params.data();
  const ConstMat Wx(p, h4, in_);
  const ConstMat Wh(p + h4 * in_, h4, h);
  double* gp = grad.data();
  Mat dWx(gp, h4, in_);
  Mat dWh(gp + h4 * in_, h4, h);
  Vec db(gp + h4 * in_ + h4 * h, h4);

  const std::size_t steps = dy.size();
  const Eigen::Index batch = steps == 0 ? 0 : dy.front().cols();
  Sequence dx(steps);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(h, batch);
  Eigen::ArrayXXd dc_next = Eigen::ArrayXXd::Zero(h, batch);
  Eigen::MatrixXd dgates(h4, batch);
  for (std::size_t k = steps; k-- > 0;) {
    const Eigen::ArrayXXd dh = (dy[k] + dh_next).array();
    const auto& i = c.i[k].array();
    const auto& f = c.f[k].array();
    const auto& g = c.g[k].array();
    const auto& o = c.o[k].array();
    const auto& tc = c.tanh_c[k].array();

    const Eigen::ArrayXXd dc = dc_next + dh * o * (1.0 - tc * tc);
    dgates.topRows(h) = (dc * g * i * (1.0 - i)).matrix();
    dgates.middleRows(h, h) = (dc * c.c_prev[k].array() * f * (1.0 - f)).matrix();
    dgates.middleRows(2 * h, h) = (dc * i * (1.0 - g * g)).matrix();
    dgates.bottomRows(h) = (dh * tc * o * (1.0 - o)).matrix();

    dWx.noalias() += dgates * c.x[k].transpose();
    dWh.noalias() += dgates * c.h_prev[k].transpose();
    db += dgates.rowwise().sum();
    dx[k].noalias() = Wx.transpose() * dgates;
    dh_next.noalias() = Wh.transpose() * dgates;
    dc_next = dc * f;
  }
  return dx;
}

// ---------------------------------------------------------------- TCN block

CausalConvBlock::CausalConvBlock(int in, int out, int kernel_width, int dilation)
    : in_(in), out_(out), kernel_(kernel_width), dilation_(dilation) {}

std::string CausalConvBlock::name() const {
  return "tcn_block(" + std::to_string(in_) + "->" + std::to_string(out_) + ", k=" + std::to_string(kernel_) +
         ", d=" + std::to_string(dilation_) + ")";
}

std::size_t CausalConvBlock::param_count() const {
  const std::size_t conv = static_cast<std::size_t>(kernel_) * out_ * in_ + out_;
  return conv + (projected() ? static_cast<std::size_t>(out_) * in_ : 0);
}

void CausalConvBlock::init(std::span<double> params, std::uint64_t seed) const {
  std::mt19937_64 gen(seed);
  const std::size_t taps = static_cast<std::size_t>(kernel_) * out_ * in_;
  fill_uniform(params.first(taps), std::sqrt(6.0 / (kernel_ * in_)), gen);
  std::fill(params.begin() + static_cast<std::ptrdiff_t>(taps),
            params.begin() + static_cast<std::ptrdiff_t>(taps + out_), 0.0);
  if (projected()) fill_uniform(params.subspan(taps + out_), std::sqrt(3.0 / in_), gen);
}

Sequence CausalConvBlock::forward(std::span<const double> params, const Sequence& x,
                                  std::unique_ptr<LayerCache>& cache) const {
  const Eigen::Index tap = static_cast<Eigen::Index>(out_) * in_;
  const double* p = params.data();
  const ConstVec b(p + kernel_ * tap, out_);
  const ConstMat P(p + kernel_ * tap + out_, projected() ? out_ : 0, projected() ? in_ : 0);

  auto c = std::make_unique<ConvCache>();
  Sequence y(x.size());
  const auto steps = static_cast<std::ptrdiff_t>(x.size());
  for (std::ptrdiff_t t = 0; t < steps; ++t) {
    Eigen::MatrixXd pre = Eigen::MatrixXd::Zero(out_, x[t].cols());
    for (int j = 0; j < kernel_; ++j) {
      const std::ptrdiff_t s = t - static_cast<std::ptrdiff_t>(j) * dilation_;
      if (s < 0) break;
      pre.noalias() += ConstMat(p + j * tap, out_, in_) * x[s];
    }
    pre.colwise() += b;
    Eigen::MatrixXd out = pre.cwiseMax(0.0);
    if (projected())
      out.noalias() += P * x[t];
    else
      out += x[t];
    c->pre.push_back(std::move(pre));
    y[t] = std::move(out);
  }
  c->x = x;
  cache = std::move(c);
  return y;
}

Sequence CausalConvBlock::backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                                   std::span<double> grad) const {
  const auto& c = static_cast<const ConvCache&>(cache);
  const Eigen::Index tap = static_cast<Eigen::Index>(out_) * in_;
  const double* p = params.data();
  double* g = grad.data();
  Vec db(g + kernel_ * tap, out_);

  const auto steps = static_cast<std::ptrdiff_t>(dy.size());
  Sequence dx(dy.size());
  for (std::ptrdiff_t t = 0; t < steps; ++t) dx[t] = Eigen::MatrixXd::Zero(in_, dy[t].cols());
  for (std::ptrdiff_t t = 0; t < steps; ++t) {
    const Eigen::MatrixXd dpre = dy[t].cwiseProduct(relu_mask(c.pre[t]));
    db += dpre.rowwise().sum();
    for (int j = 0; j < kernel_; ++j) {
      const std::ptrdiff_t s = t - static_cast<std::ptrdiff_t>(j) * dilation_;
      if (s < 0) break;
      Mat(g + j * tap, out_, in_).noalias() += dpre * c.x[s].transpose();
      dx[s].noalias() += ConstMat(p + j * tap, out_, in_).transpose() * dpre;
    }
    if (projected()) {
      const ConstMat P(p + kernel_ * tap + out_, out_, in_);
      Mat(g + kernel_ * tap + out_, out_, in_).noalias() += dy[t] * c.x[t].transpose();
      dx[t].noalias() += P.transpose() * dy[t];
    } else {
      dx[t] += dy[t];
    }
  }
  return dx;
}

// ---------------------------------------------------------------- last step

Sequence LastStep::forward(std::span<const double>, const Sequence& x, std::unique_ptr<LayerCache>& cache) const {
  auto c = std::make_unique<LastStepCache>();
  c->steps = x.size();
  c->features = x.back().rows();
  Sequence y{x.back()};
  cache = std::move(c);
  return y;
}

Sequence LastStep::backward(std::span<const double>, const LayerCache& cache, const Sequence& dy,
                            std::span<double>) const {
  const auto& c = static_cast<const LastStepCache&>(cache);
  Sequence dx(c.steps);
  for (std::size_t t = 0; t + 1 < c.steps; ++t) dx[t] = Eigen::MatrixXd::Zero(c.features, dy.front().cols());
  dx.back() = dy.front();
  return dx;
}

}  // namespace tubecast::layers
