#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cloudlead/errors.hpp"
#include "cloudlead/parallel.hpp"
#include "cloudlead/rng.hpp"

namespace cloudlead::tcn {

struct TcnConfig {
  int kernel_size = 3;
  std::vector<int> dilations = {1, 3, 9};
  int n_stacks = 1;
  int n_filters = 64;
  int in_channels = 1;
  int out_dim = 12;
  bool use_residual = true;
  bool use_skip = true;
  bool seq2seq = false;  // false: head reads the final step only
  std::uint64_t seed = 0;

  void validate() const {
    if (kernel_size < 1) throw ConfigError("kernel_size must be >= 1");
    if (dilations.empty()) throw ConfigError("dilations must be non-empty");
    for (int d : dilations)
      if (d < 1) throw ConfigError("dilations must be >= 1");
    if (n_stacks < 1) throw ConfigError("n_stacks must be >= 1");
    if (n_filters < 1) throw ConfigError("n_filters must be >= 1");
    if (in_channels < 1) throw ConfigError("in_channels must be >= 1");
    if (out_dim < 1) throw ConfigError("out_dim must be >= 1");
  }
};

// Span of past steps that can influence one output step: each residual level
// holds two dilated convolutions, each reaching (K-1)*d further back.
inline int receptive_field(const TcnConfig& cfg) {
  cfg.validate();
  int dil_sum = 0;
  for (int d : cfg.dilations) dil_sum += d;
  return 1 + 2 * (cfg.kernel_size - 1) * cfg.n_stacks * dil_sum;
}

// Single-channel dilated causal convolution: y[m] = sum_i f[i] * x[m - d*i],
// reading x as 0 at negative indices. Output length equals input length.
template <class DerivedX, class DerivedF>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> dilated_causal_conv(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedF>& filter,
    int dilation) {
  using Scalar = typename DerivedX::Scalar;
  if (dilation < 1) throw ConfigError("dilation must be >= 1");
  const Eigen::Index T = x.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(T);
  for (Eigen::Index i = 0; i < filter.size(); ++i) {
    const Eigen::Index shift = dilation * i;
    if (shift >= T) break;
    y.segment(shift, T - shift) += filter[i] * x.segment(0, T - shift);
  }
  return y;
}

template <class Scalar>
struct Sample {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> input;   // channels x T
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> target;  // out_dim x (1 or T)
};

// Dilated causal convolutional network with residual blocks and optional
// skip aggregation. All parameters live in one flat vector; named views are
// mapped on demand, which keeps the optimizer, the finite-difference checks
// and serialization trivial.
template <class Scalar>
class Tcn {
public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MapMat = Eigen::Map<Mat>;
  using CMapMat = Eigen::Map<const Mat>;

  struct Tensor {
    std::string name;
    Eigen::Index offset = 0, rows = 0, cols = 0;
  };

  TcnConfig config;
  Vec params;

  explicit Tcn(TcnConfig cfg) : config(std::move(cfg)) {
    config.validate();
    build_layout();
    init_params();
  }

  Eigen::Index n_params() const { return params.size(); }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  CMapMat view(int t) const {
    const Tensor& s = tensors_[t];
    return CMapMat(params.data() + s.offset, s.rows, s.cols);
  }
  MapMat view(int t) {
    Tensor& s = tensors_[t];
    return MapMat(params.data() + s.offset, s.rows, s.cols);
  }
  int tensor_index(const std::string& name) const {
    for (int i = 0; i < static_cast<int>(tensors_.size()); ++i)
      if (tensors_[i].name == name) return i;
    throw ConfigError("unknown tensor '" + name + "'");
  }

  // Activations kept for the backward pass.
  struct Cache {
    Mat x;
    std::vector<Mat> h_in, pre1, a1, pre2, h_out;
    Mat feat;
  };

  Mat forward(const Mat& x) const {
    Cache cache;
    return forward_cached(x, cache);
  }

  Mat forward_cached(const Mat& x, Cache& c) const {
    if (x.rows() != config.in_channels)
      throw ConfigError("input has " + std::to_string(x.rows()) + " channels, config wants " +
                        std::to_string(config.in_channels));
    if (x.cols() < 1) throw ConfigError("input sequence is empty");
    const Eigen::Index T = x.cols();
    const int nb = static_cast<int>(blocks_.size());
    c.x = x;
    c.h_in.resize(nb);
    c.pre1.resize(nb);
    c.a1.resize(nb);
    c.pre2.resize(nb);
    c.h_out.resize(nb);

    Mat h = x;
    Mat skip;
    if (config.use_skip) skip = Mat::Zero(config.n_filters, T);
    for (int b = 0; b < nb; ++b) {
      const Block& blk = blocks_[b];
      c.h_in[b] = h;
      conv_forward(h, blk.w1, blk.b1, blk.dilation, c.pre1[b]);
      c.a1[b] = c.pre1[b].cwiseMax(Scalar(0));
      conv_forward(c.a1[b], blk.w2, blk.b2, blk.dilation, c.pre2[b]);
      Mat out = c.pre2[b].cwiseMax(Scalar(0));
      if (config.use_residual) {
        if (blk.proj >= 0)
          out.noalias() += view(blk.proj) * h;
        else
          out += h;
      }
      h = std::move(out);
      c.h_out[b] = h;
      if (config.use_skip) skip += h;
    }
    c.feat = config.use_skip ? std::move(skip) : h;

    const CMapMat wo = view(head_w_);
    const CMapMat bo = view(head_b_);
    if (config.seq2seq) {
      Mat y = wo * c.feat;
      y.colwise() += bo.col(0);
      return y;
    }
    Mat y = wo * c.feat.col(T - 1);
    y += bo;
    return y;
  }

  // Accumulates parameter gradients into `grad` (same layout as params) and
  // returns the gradient with respect to the input sequence.
  Mat backward(const Cache& c, const Mat& dout, Vec& grad) const {
    const Eigen::Index T = c.x.cols();
    const int nb = static_cast<int>(blocks_.size());

    Mat dfeat = Mat::Zero(config.n_filters, T);
    {
      MapMat dwo = grad_view(grad, head_w_);
      MapMat dbo = grad_view(grad, head_b_);
      const CMapMat wo = view(head_w_);
      if (config.seq2seq) {
        dwo.noalias() += dout * c.feat.transpose();
        dbo.col(0) += dout.rowwise().sum();
        dfeat.noalias() += wo.transpose() * dout;
      } else {
        dwo.noalias() += dout * c.feat.col(T - 1).transpose();
        dbo += dout;
        dfeat.col(T - 1).noalias() += wo.transpose() * dout.col(0);
      }
    }

    Mat dcarry = Mat::Zero(c.h_out[nb - 1].rows(), T);
    for (int b = nb - 1; b >= 0; --b) {
      const Block& blk = blocks_[b];
      Mat dh = dcarry;
      if (config.use_skip)
        dh += dfeat;
      else if (b == nb - 1)
        dh += dfeat;

      // conv2 <- relu <- conv1 <- relu, then the residual shortcut
      Mat dpre2 =
          (c.pre2[b].array() > Scalar(0)).template cast<Scalar>().array() * dh.array();
      Mat da1;
      conv_backward(c.a1[b], dpre2, blk.w2, blk.b2, blk.dilation, grad, da1);
      Mat dpre1 =
          (c.pre1[b].array() > Scalar(0)).template cast<Scalar>().array() * da1.array();
      Mat dhin;
      conv_backward(c.h_in[b], dpre1, blk.w1, blk.b1, blk.dilation, grad, dhin);
      if (config.use_residual) {
        if (blk.proj >= 0) {
          grad_view(grad, blk.proj).noalias() += dh * c.h_in[b].transpose();
          dhin.noalias() += view(blk.proj).transpose() * dh;
        } else {
          dhin += dh;
        }
      }
      dcarry = std::move(dhin);
    }
    return dcarry;
  }

private:
  struct Block {
    int w1 = 0, b1 = 0, w2 = 0, b2 = 0, proj = -1;
    int dilation = 1, in_ch = 0;
  };

  std::vector<Tensor> tensors_;
  std::vector<Block> blocks_;
  int head_w_ = -1, head_b_ = -1;
  Eigen::Index total_ = 0;

  int add_tensor(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    tensors_.push_back({name, total_, rows, cols});
    total_ += rows * cols;
    return static_cast<int>(tensors_.size()) - 1;
  }

  void build_layout() {
    const int F = config.n_filters;
    const int K = config.kernel_size;
    int in_ch = config.in_channels;
    for (int s = 0; s < config.n_stacks; ++s) {
      for (std::size_t l = 0; l < config.dilations.size(); ++l) {
        Block blk;
        blk.dilation = config.dilations[l];
        blk.in_ch = in_ch;
        const std::string base = "stack" + std::to_string(s) + ".level" + std::to_string(l);
        blk.w1 = add_tensor(base + ".conv1.w", F, static_cast<Eigen::Index>(in_ch) * K);
        blk.b1 = add_tensor(base + ".conv1.b", F, 1);
        blk.w2 = add_tensor(base + ".conv2.w", F, static_cast<Eigen::Index>(F) * K);
        blk.b2 = add_tensor(base + ".conv2.b", F, 1);
        if (config.use_residual && in_ch != F)
          blk.proj = add_tensor(base + ".proj.w", F, in_ch);
        blocks_.push_back(blk);
        in_ch = F;
      }
    }
    head_w_ = add_tensor("head.w", config.out_dim, F);
    head_b_ = add_tensor("head.b", config.out_dim, 1);
    params = Vec::Zero(total_);
  }

  void init_params() {
    Rng rng(splitmix64(config.seed ^ 0x7C4E1D3AULL));
    const int K = config.kernel_size;
    for (std::size_t t = 0; t < tensors_.size(); ++t) {
      const Tensor& s = tensors_[t];
      const bool is_bias = s.cols == 1 && s.name.size() > 2 &&
                           s.name.compare(s.name.size() - 2, 2, ".b") == 0;
      if (is_bias) continue;  // biases start at zero
      Eigen::Index fan_in = s.cols;  // conv tensors store K taps side by side
      (void)K;
      const double scale = std::sqrt(1.0 / static_cast<double>(fan_in));
      Scalar* p = params.data() + s.offset;
      for (Eigen::Index i = 0; i < s.rows * s.cols; ++i)
        p[i] = static_cast<Scalar>(rng.uniform(-scale, scale));
    }
  }

  MapMat grad_view(Vec& grad, int t) const {
    const Tensor& s = tensors_[t];
    return MapMat(grad.data() + s.offset, s.rows, s.cols);
  }

  // y(:,t) = b + sum_k W_k x(:, t - d*k); weight tensor packs the K taps as
  // [W_0 | W_1 | ... | W_{K-1}], each F x C.
  void conv_forward(const Mat& x, int w_idx, int b_idx, int d, Mat& y) const {
    const Eigen::Index T = x.cols();
    const Eigen::Index C = x.rows();
    const CMapMat w = view(w_idx);
    const CMapMat b = view(b_idx);
    y = b.col(0).replicate(1, T);
    for (int k = 0; k < config.kernel_size; ++k) {
      const Eigen::Index shift = static_cast<Eigen::Index>(d) * k;
      if (shift >= T) break;
      y.rightCols(T - shift).noalias() +=
          w.middleCols(static_cast<Eigen::Index>(k) * C, C) * x.leftCols(T - shift);
    }
  }

  void conv_backward(const Mat& x, const Mat& dy, int w_idx, int b_idx, int d, Vec& grad,
                     Mat& dx) const {
    const Eigen::Index T = x.cols();
    const Eigen::Index C = x.rows();
    const CMapMat w = view(w_idx);
    MapMat dw = grad_view(grad, w_idx);
    MapMat db = grad_view(grad, b_idx);
    db.col(0) += dy.rowwise().sum();
    dx = Mat::Zero(C, T);
    for (int k = 0; k < config.kernel_size; ++k) {
      const Eigen::Index shift = static_cast<Eigen::Index>(d) * k;
      if (shift >= T) break;
      dw.middleCols(static_cast<Eigen::Index>(k) * C, C).noalias() +=
          dy.rightCols(T - shift) * x.leftCols(T - shift).transpose();
      dx.leftCols(T - shift).noalias() +=
          w.middleCols(static_cast<Eigen::Index>(k) * C, C).transpose() * dy.rightCols(T - shift);
    }
  }
};

// Mean-squared-error loss over one sample; dpred is scaled by `weight`
// (1/batch for batch-mean gradients).
template <class Scalar>
double sample_loss_grad(const Tcn<Scalar>& model, const Sample<Scalar>& s,
                        typename Tcn<Scalar>::Vec& grad, double weight) {
  typename Tcn<Scalar>::Cache cache;
  const auto pred = model.forward_cached(s.input, cache);
  if (pred.rows() != s.target.rows() || pred.cols() != s.target.cols())
    throw ConfigError("target shape does not match model output");
  const auto err = (pred - s.target).eval();
  const double loss = err.squaredNorm() / static_cast<double>(err.size());
  const auto dout =
      (err * Scalar(2.0 * weight / static_cast<double>(err.size()))).eval();
  model.backward(cache, dout, grad);
  return loss;
}

template <class Scalar>
double sample_loss(const Tcn<Scalar>& model, const Sample<Scalar>& s) {
  const auto pred = model.forward(s.input);
  const auto err = (pred - s.target).eval();
  return err.squaredNorm() / static_cast<double>(err.size());
}

// Batch-mean loss and its gradient; per-sample contributions are reduced in
// sample order so the result is independent of the thread schedule.
template <class Scalar>
double batch_gradients(const Tcn<Scalar>& model, const std::vector<Sample<Scalar>>& batch,
                       typename Tcn<Scalar>::Vec& grad, int threads = 1) {
  using Vec = typename Tcn<Scalar>::Vec;
  if (batch.empty()) throw ConfigError("empty batch");
  grad = Vec::Zero(model.n_params());
  const double w = 1.0 / static_cast<double>(batch.size());
  std::vector<Vec> slot(batch.size());
  std::vector<double> losses(batch.size());
  parallel_for(static_cast<std::int64_t>(batch.size()), threads, [&](std::int64_t i) {
    slot[i] = Vec::Zero(model.n_params());
    losses[i] = sample_loss_grad(model, batch[i], slot[i], w);
  });
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    grad += slot[i];
    loss += losses[i] * w;
  }
  if (!std::isfinite(loss)) throw DataError("non-finite training loss");
  return loss;
}

// Max relative error between analytic and central-difference gradients.
template <class Scalar>
double grad_check(Tcn<Scalar>& model, const std::vector<Sample<Scalar>>& batch,
                  double eps = 1e-5) {
  static_assert(std::is_same_v<Scalar, double>,
                "finite-difference checks need double precision");
  typename Tcn<Scalar>::Vec grad;
  batch_gradients(model, batch, grad);
  auto batch_loss = [&]() {
    double l = 0.0;
    for (const auto& s : batch) l += sample_loss(model, s) / batch.size();
    return l;
  };
  double worst = 0.0;
  for (Eigen::Index i = 0; i < model.n_params(); ++i) {
    const double saved = model.params[i];
    model.params[i] = saved + eps;
    const double lp = batch_loss();
    model.params[i] = saved - eps;
    const double lm = batch_loss();
    model.params[i] = saved;
    const double numeric = (lp - lm) / (2.0 * eps);
    const double analytic = grad[i];
    const double denom = std::max(std::abs(numeric), std::abs(analytic));
    if (denom < 1e-7) continue;
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  }
  return worst;
}

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  double learning_rate = 1e-3;
  std::optional<double> gradient_clip;  // global L2 norm
  int early_stop_patience = 0;          // 0 = run all epochs
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> curve;
  int best_epoch = -1;       // epoch whose parameters were kept
  double best_val_loss = 0.0;
};

// Adam on the batch-mean MSE. With a non-empty validation set the model is
// left at the best-validation parameters; early stopping kicks in after
// `early_stop_patience` epochs without improvement (0 disables).
template <class Scalar>
TrainResult train(Tcn<Scalar>& model, const std::vector<Sample<Scalar>>& train_set,
                  const std::vector<Sample<Scalar>>& val_set, const TrainConfig& cfg,
                  int threads = 1) {
  using Vec = typename Tcn<Scalar>::Vec;
  cfg.validate();
  if (train_set.empty()) throw ConfigError("empty training set");

  const int rf = receptive_field(model.config);
  if (train_set[0].input.cols() < rf) {
    // Window shorter than the receptive field still works (zero padding),
    // it just wastes part of the field; callers are warned via stderr.
    std::fprintf(stderr, "warning: window length %ld below receptive field %d\n",
                 static_cast<long>(train_set[0].input.cols()), rf);
  }

  Vec m = Vec::Zero(model.n_params());
  Vec v = Vec::Zero(model.n_params());
  Vec grad;
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  std::int64_t step = 0;

  auto eval_loss = [&](const std::vector<Sample<Scalar>>& set) {
    if (set.empty()) return 0.0;
    std::vector<double> losses(set.size());
    parallel_for(static_cast<std::int64_t>(set.size()), threads,
                 [&](std::int64_t i) { losses[i] = sample_loss(model, set[i]); });
    double total = 0.0;
    for (double l : losses) total += l;
    return total / static_cast<double>(set.size());
  };

  TrainResult result;
  Vec best_params = model.params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1, stall = 0;
  Rng shuffle_rng(splitmix64(cfg.seed ^ 0x5EEDF00DULL));

  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int n_batches = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const std::size_t take = std::min<std::size_t>(cfg.batch_size, order.size() - at);
      std::vector<Sample<Scalar>> batch;
      batch.reserve(take);
      for (std::size_t i = 0; i < take; ++i) batch.push_back(train_set[order[at + i]]);
      epoch_loss += batch_gradients(model, batch, grad, threads);
      ++n_batches;
      if (cfg.gradient_clip) {
        const double norm = std::sqrt(static_cast<double>(grad.squaredNorm()));
        if (norm > *cfg.gradient_clip) grad *= Scalar(*cfg.gradient_clip / norm);
      }
      ++step;
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
      const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
      model.params -=
          (cfg.learning_rate * (m / bc1).array() / ((v / bc2).array().sqrt() + adam_eps))
              .matrix();
    }
    const double val_loss = eval_loss(val_set);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.curve.push_back({epoch, epoch_loss / std::max(1, n_batches), val_loss, secs});

    if (!val_set.empty()) {
      if (val_loss < best_val) {
        best_val = val_loss;
        best_params = model.params;
        best_epoch = epoch;
        stall = 0;
      } else if (++stall >= cfg.early_stop_patience && cfg.early_stop_patience > 0) {
        break;
      }
    }
  }
  if (!val_set.empty() && best_epoch >= 0) {
    model.params = best_params;
    result.best_epoch = best_epoch;
    result.best_val_loss = best_val;
  } else {
    result.best_epoch = static_cast<int>(result.curve.size()) - 1;
    result.best_val_loss = result.curve.empty() ? 0.0 : result.curve.back().val_loss;
  }
  return result;
}

template <class Scalar>
typename Tcn<Scalar>::Vec predict(const Tcn<Scalar>& model,
                                  const typename Tcn<Scalar>::Mat& window) {
  const auto out = model.forward(window);
  return Eigen::Map<const typename Tcn<Scalar>::Vec>(out.data(), out.size());
}

using TcnModel = Tcn<double>;
using TrainSample = Sample<double>;

}  // namespace cloudlead::tcn
