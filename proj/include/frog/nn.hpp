#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "frog/adcore.hpp"
#include "frog/data.hpp"
#include "frog/errors.hpp"
#include "frog/fgrad.hpp"
#include "frog/rng.hpp"
#include "frog/tangent.hpp"

namespace frog {

/// Fully-connected network with ReLU after every layer except the last.
/// widths = {in, h_1, ..., h_{L-1}, out}; layer l maps widths[l] ->
/// widths[l+1]. Weights use Kaiming-style uniform fan-in initialization,
/// W ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)), biases start at zero.
struct Mlp {
  std::vector<Eigen::MatrixXd> weights;  // layer l: widths[l+1] x widths[l]
  std::vector<Eigen::VectorXd> biases;

  int depth() const { return static_cast<int>(weights.size()); }

  std::vector<int> widths() const {
    std::vector<int> w;
    w.push_back(static_cast<int>(weights.front().cols()));
    for (const auto& m : weights) w.push_back(static_cast<int>(m.rows()));
    return w;
  }

  std::int64_t parameter_count() const {
    std::int64_t total = 0;
    for (const auto& m : weights) total += m.size();
    for (const auto& b : biases) total += b.size();
    return total;
  }

  static Mlp kaiming_init(const std::vector<int>& widths, std::uint64_t seed) {
    require(widths.size() >= 2, errc::bad_config, "network needs at least one layer");
    Mlp net;
    Xoshiro256pp rng(seed);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const int fan_in = widths[l];
      const int fan_out = widths[l + 1];
      require(fan_in >= 1 && fan_out >= 1, errc::bad_config, "layer widths must be positive");
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
      Eigen::MatrixXd w(fan_out, fan_in);
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r)
          w(r, c) = (2.0 * rng.uniform01() - 1.0) * limit;
      net.weights.push_back(std::move(w));
      net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return net;
  }
};

/// All intermediate activations of one forward pass plus the mean softmax
/// cross-entropy loss. act[l] is the layer-group output h_l (post-ReLU for
/// hidden groups, raw logits for the last); pre[l] is the pre-activation.
struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;  // B x widths[l+1]
  std::vector<Eigen::MatrixXd> act;  // B x widths[l+1]
  double loss = 0.0;
};

namespace detail {

/// Row-wise log-sum-exp, stabilized by the row maximum.
inline Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& logits) {
  Eigen::VectorXd out(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out(i) = m + std::log((logits.row(i).array() - m).exp().sum());
  }
  return out;
}

inline void check_batch(const Mlp& net, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  require(x.cols() == net.weights.front().cols(), errc::shape_mismatch,
          "input has " + std::to_string(x.cols()) + " features, network expects " +
              std::to_string(net.weights.front().cols()));
  require(x.rows() == static_cast<Eigen::Index>(y.size()), errc::shape_mismatch,
          "batch size and label count differ");
  const int classes = static_cast<int>(net.weights.back().rows());
  for (const int label : y)
    require(label >= 0 && label < classes, errc::shape_mismatch,
            "label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
}

}  // namespace detail

inline ForwardPass forward(const Mlp& net, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  detail::check_batch(net, x, y);
  const int depth = net.depth();
  ForwardPass fwd;
  fwd.pre.resize(depth);
  fwd.act.resize(depth);

  Eigen::MatrixXd h = x;
  for (int l = 0; l < depth; ++l) {
    fwd.pre[l] = (h * net.weights[l].transpose()).rowwise() + net.biases[l].transpose();
    fwd.act[l] = (l + 1 < depth) ? fwd.pre[l].cwiseMax(0.0) : fwd.pre[l];
    h = fwd.act[l];
  }

  const Eigen::MatrixXd& logits = fwd.act.back();
  const Eigen::VectorXd lse = detail::log_sum_exp_rows(logits);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    loss += lse(i) - logits(i, y[static_cast<std::size_t>(i)]);
  fwd.loss = loss / static_cast<double>(logits.rows());
  require(std::isfinite(fwd.loss), errc::non_finite, "forward loss is not finite");
  return fwd;
}

/// Exact gradients for every parameter and every layer-group output
/// activation. act[l] holds dL/dh_l, the quantity activity perturbation
/// estimates; it doubles as the simulation path for forward gradients.
struct Gradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  std::vector<Eigen::MatrixXd> act;
};

inline Gradients backprop(const Mlp& net, const Eigen::MatrixXd& x, const std::vector<int>& y,
                          const ForwardPass& fwd) {
  const int depth = net.depth();
  const auto batch = static_cast<double>(x.rows());

  Gradients grads;
  grads.w.resize(depth);
  grads.b.resize(depth);
  grads.act.resize(depth);

  // dL/dlogits for mean softmax cross-entropy: (softmax - onehot) / B.
  const Eigen::MatrixXd& logits = fwd.act.back();
  const Eigen::VectorXd lse = detail::log_sum_exp_rows(logits);
  Eigen::MatrixXd delta = ((logits.colwise() - lse).array().exp()) / batch;
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    delta(i, y[static_cast<std::size_t>(i)]) -= 1.0 / batch;

  for (int l = depth - 1; l >= 0; --l) {
    grads.act[l] = delta;  // dL/dh_l before applying this group's ReLU mask
    Eigen::MatrixXd dz =
        (l + 1 < depth) ? (delta.array() * (fwd.pre[l].array() > 0.0).cast<double>()).matrix()
                        : delta;
    const Eigen::MatrixXd& input = (l == 0) ? x : fwd.act[l - 1];
    grads.w[l] = dz.transpose() * input;
    grads.b[l] = dz.colwise().sum().transpose();
    if (l > 0) delta = dz * net.weights[l];
  }
  return grads;
}

/// How directional derivatives are obtained in activity perturbation:
/// from the exact activation gradient (one backward pass), or from real
/// forward-mode JVP sweeps through the layers downstream of the
/// perturbation site. Both produce the same estimates; simulation is the
/// fast path, jvp the backpropagation-free one.
enum class FgMode { simulation, jvp };

inline const char* fg_mode_name(FgMode m) {
  return m == FgMode::simulation ? "simulation" : "jvp";
}

inline FgMode fg_mode_from_string(const std::string& s) {
  if (s == "simulation") return FgMode::simulation;
  if (s == "jvp") return FgMode::jvp;
  raise(errc::bad_config, "unknown forward-gradient mode '" + s + "'");
}

/// Activity-perturbation output: parameter gradients estimated per layer
/// group, plus the per-group pieces (estimated activation gradient, tangent
/// sets, directional derivatives) the estimates were built from.
struct ActivityFg {
  Gradients grads;
  std::vector<Eigen::MatrixXd> act_estimate;  // B x width per group
  std::vector<TangentSet> tangents;           // (B*width) x k per group
  std::vector<Eigen::VectorXd> derivs;        // k per group
  double loss = 0.0;
};

namespace detail {

/// Loss as a function of group l's output activation, evaluated over
/// MultiDual scalars: propagates layers l+1..L-1 and the cross-entropy.
/// `h_flat` is the column-major flattening of the B x width activation.
inline MultiDual downstream_loss_dual(const Mlp& net, int group, Eigen::Index batch,
                                      std::span<const MultiDual> h_flat,
                                      const std::vector<int>& y) {
  const int depth = net.depth();
  const auto width_of = [&](int l) { return net.weights[static_cast<std::size_t>(l)].rows(); };

  std::vector<MultiDual> loss_terms;
  loss_terms.reserve(static_cast<std::size_t>(batch));
  std::vector<MultiDual> h, z;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Index w0 = width_of(group);
    h.assign(static_cast<std::size_t>(w0), MultiDual{});
    for (Eigen::Index j = 0; j < w0; ++j)
      h[static_cast<std::size_t>(j)] = h_flat[static_cast<std::size_t>(b + batch * j)];

    for (int l = group + 1; l < depth; ++l) {
      z = matvec(net.weights[static_cast<std::size_t>(l)], h);
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(z.size()); ++j)
        z[static_cast<std::size_t>(j)] =
            z[static_cast<std::size_t>(j)] + net.biases[static_cast<std::size_t>(l)](j);
      if (l + 1 < depth)
        for (auto& zj : z) zj = relu(zj);
      h = z;
    }

    // Cross-entropy with a constant shift for stability; the shift does not
    // change the function, so tangents stay exact.
    double max_logit = h.front().value;
    for (const auto& hj : h) max_logit = std::max(max_logit, hj.value);
    std::vector<MultiDual> exps(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) exps[j] = exp(h[j] - max_logit);
    const MultiDual lse = max_logit + log(sum(std::span<const MultiDual>(exps)));
    loss_terms.push_back(lse - h[static_cast<std::size_t>(y[static_cast<std::size_t>(b)])]);
  }
  return sum(std::span<const MultiDual>(loss_terms)) / static_cast<double>(batch);
}

inline Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

}  // namespace detail

/// Multi-tangent forward gradient with activity perturbation: per layer
/// group, sample k Gaussian tangents in the flattened (batch x width)
/// activation space of the group output, obtain the k directional
/// derivatives of the loss along them, combine into an estimated activation
/// gradient, and chain analytically through the local FC+ReLU block to the
/// group's weights and biases.
///
/// Tangents for group l come from substream derive_seed(seed, l), one
/// independent set per group.
inline ActivityFg activity_forward_gradient(const Mlp& net, const Eigen::MatrixXd& x,
                                            const std::vector<int>& y, Eigen::Index k,
                                            Combiner combiner, std::uint64_t seed,
                                            FgMode mode = FgMode::simulation,
                                            double rank_tolerance = kDefaultRankTolerance) {
  require(k >= 1, errc::bad_config, "activity perturbation needs k >= 1");
  require(combiner != Combiner::single || k == 1, errc::bad_config,
          "single combiner requires k = 1");

  const ForwardPass fwd = forward(net, x, y);
  const int depth = net.depth();
  const Eigen::Index batch = x.rows();

  Gradients exact;  // simulation mode reuses one exact backward pass
  if (mode == FgMode::simulation) exact = backprop(net, x, y, fwd);

  ActivityFg out;
  out.loss = fwd.loss;
  out.grads.w.resize(depth);
  out.grads.b.resize(depth);
  out.grads.act.resize(depth);
  out.act_estimate.resize(depth);
  out.tangents.reserve(static_cast<std::size_t>(depth));
  out.derivs.resize(depth);

  for (int l = 0; l < depth; ++l) {
    const Eigen::Index width = net.weights[static_cast<std::size_t>(l)].rows();
    const Eigen::Index site_dim = batch * width;
    TangentSet v = sample_gaussian(site_dim, k, derive_seed(seed, static_cast<std::uint64_t>(l)));

    Eigen::VectorXd d(k);
    if (mode == FgMode::simulation) {
      const Eigen::Map<const Eigen::VectorXd> act_grad(exact.act[l].data(), site_dim);
      d = v.matrix.transpose() * act_grad;
    } else {
      std::vector<MultiDual> h_flat;
      h_flat.reserve(static_cast<std::size_t>(site_dim));
      const Eigen::Map<const Eigen::VectorXd> site(fwd.act[l].data(), site_dim);
      for (Eigen::Index i = 0; i < site_dim; ++i)
        h_flat.emplace_back(site(i), Eigen::VectorXd(v.matrix.row(i).transpose()));
      const MultiDual loss =
          detail::downstream_loss_dual(net, l, batch, std::span<const MultiDual>(h_flat), y);
      require(!loss.is_constant(), errc::shape_mismatch, "downstream loss lost its tangents");
      d = loss.tangent;
      require(d.allFinite(), errc::non_finite, "directional derivatives are not finite");
    }

    Eigen::VectorXd g_flat;
    switch (combiner) {
      case Combiner::single: g_flat = single(v.matrix.col(0), d(0)).g; break;
      case Combiner::sum: g_flat = combine_sum(v, d).g; break;
      case Combiner::mean: g_flat = combine_mean(v, d).g; break;
      case Combiner::projection: g_flat = combine_projection(v, d, rank_tolerance).g; break;
    }

    Eigen::MatrixXd g_act = Eigen::Map<const Eigen::MatrixXd>(g_flat.data(), batch, width);
    out.act_estimate[l] = g_act;
    out.grads.act[l] = g_act;
    out.tangents.push_back(std::move(v));
    out.derivs[l] = d;

    // Chain through the local block: mask by the group's ReLU, then the
    // exact Jacobians of the affine layer.
    const Eigen::MatrixXd dz =
        (l + 1 < depth) ? (g_act.array() * detail::relu_mask(fwd.pre[l]).array()).matrix() : g_act;
    const Eigen::MatrixXd& input = (l == 0) ? x : fwd.act[l - 1];
    out.grads.w[l] = dz.transpose() * input;
    out.grads.b[l] = dz.colwise().sum().transpose();
  }
  return out;
}

/// Training configuration for the MNIST-style experiments.
struct TrainConfig {
  int batch_size = 64;
  int epochs = 200;
  int patience = 10;  // epochs without validation improvement
  double lr = 0.01;
  Estimator estimator = Estimator::exact;
  Eigen::Index k = 1;
  FgMode mode = FgMode::simulation;
  std::uint64_t seed = 0;
  double rank_tolerance = kDefaultRankTolerance;
};

struct EpochRecord {
  int epoch = 0;  // 0 = untrained network
  double train_loss = 0.0;
  double val_loss = 0.0;
  double test_loss = 0.0;
  double test_error_pct = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double best_test_error_pct = 100.0;
  int best_epoch = 0;
  bool diverged = false;
};

/// Mean loss and error rate on a labeled set.
inline std::pair<double, double> evaluate(const Mlp& net, const Eigen::MatrixXd& x,
                                          const std::vector<int>& y) {
  const ForwardPass fwd = forward(net, x, y);
  const Eigen::MatrixXd& logits = fwd.act.back();
  int wrong = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index argmax = 0;
    logits.row(i).maxCoeff(&argmax);
    if (argmax != y[static_cast<std::size_t>(i)]) ++wrong;
  }
  return {fwd.loss, 100.0 * static_cast<double>(wrong) / static_cast<double>(logits.rows())};
}

namespace detail {

inline constexpr std::uint64_t kShuffleSalt = 0x5348554646ULL;   // "SHUFF"
inline constexpr std::uint64_t kTangentSalt = 0x54414e47ULL;     // "TANG"

}  // namespace detail

/// SGD training loop: constant learning rate, fresh tangents per step and
/// layer group, early stopping on validation loss. Per-epoch metrics are
/// recorded for train, validation, and test; epoch 0 holds the untrained
/// network's metrics. Deterministic for a fixed config and seed.
inline TrainResult train(Mlp& net, const Dataset& data, const TrainConfig& cfg) {
  require(cfg.batch_size >= 1, errc::bad_config, "batch size must be positive");
  require(cfg.epochs >= 0, errc::bad_config, "epoch count must be non-negative");
  require(cfg.patience >= 1, errc::bad_config, "patience must be positive");
  require(cfg.lr >= 0.0, errc::bad_config, "learning rate must be non-negative");

  const Eigen::Index n_train = data.train_x.rows();
  require(n_train >= 1, errc::bad_config, "training set is empty");

  TrainResult result;
  const auto record_epoch = [&](int epoch, double train_loss) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss;
    std::tie(rec.val_loss, std::ignore) = evaluate(net, data.val_x, data.val_y);
    std::tie(rec.test_loss, rec.test_error_pct) = evaluate(net, data.test_x, data.test_y);
    result.history.push_back(rec);
    if (rec.test_error_pct < result.best_test_error_pct) {
      result.best_test_error_pct = rec.test_error_pct;
      result.best_epoch = epoch;
    }
    return rec;
  };

  {
    const auto [train_loss, _] = evaluate(net, data.train_x, data.train_y);
    record_epoch(0, train_loss);
  }

  double best_val = result.history.front().val_loss;
  int best_val_epoch = 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::uint64_t global_step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Xoshiro256pp shuffle_rng(
        derive_seed(cfg.seed ^ detail::kShuffleSalt, static_cast<std::uint64_t>(epoch)));
    for (Eigen::Index i = n_train - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(shuffle_rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n_train; start += cfg.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(cfg.batch_size, n_train - start);
      Eigen::MatrixXd bx(size, data.train_x.cols());
      std::vector<int> by(static_cast<std::size_t>(size));
      for (Eigen::Index i = 0; i < size; ++i) {
        bx.row(i) = data.train_x.row(order[static_cast<std::size_t>(start + i)]);
        by[static_cast<std::size_t>(i)] =
            data.train_y[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
      }

      ++global_step;
      double step_loss = 0.0;
      try {
        if (cfg.estimator == Estimator::exact) {
          const ForwardPass fwd = forward(net, bx, by);
          const Gradients grads = backprop(net, bx, by, fwd);
          for (int l = 0; l < net.depth(); ++l) {
            net.weights[static_cast<std::size_t>(l)] -= cfg.lr * grads.w[l];
            net.biases[static_cast<std::size_t>(l)] -= cfg.lr * grads.b[l];
          }
          step_loss = fwd.loss;
        } else {
          const ActivityFg fg = activity_forward_gradient(
              net, bx, by, cfg.estimator == Estimator::single ? 1 : cfg.k,
              combiner_of(cfg.estimator), derive_seed(cfg.seed ^ detail::kTangentSalt, global_step),
              cfg.mode, cfg.rank_tolerance);
          for (int l = 0; l < net.depth(); ++l) {
            net.weights[static_cast<std::size_t>(l)] -= cfg.lr * fg.grads.w[l];
            net.biases[static_cast<std::size_t>(l)] -= cfg.lr * fg.grads.b[l];
          }
          step_loss = fg.loss;
        }
      } catch (const Error& e) {
        if (e.code() == errc::non_finite || e.code() == errc::rank_deficient) {
          result.diverged = true;
          break;
        }
        throw;
      }
      epoch_loss += step_loss;
      ++batches;
    }
    if (result.diverged) break;

    const EpochRecord rec = record_epoch(epoch, epoch_loss / std::max(batches, 1));
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best_val_epoch = epoch;
    }
    if (epoch - best_val_epoch >= cfg.patience) break;
  }
  return result;
}

}  // namespace frog
