#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "frog/data.hpp"
#include "frog/nn.hpp"

using frog::Combiner;
using frog::Estimator;
using frog::FgMode;
using frog::Mlp;

namespace {

// FC(2->2) + ReLU + FC(2->2) with fixed weights; expected values computed
// with an independent scripted forward/backward pass.
Mlp hand_net() {
  Mlp net;
  Eigen::MatrixXd w1(2, 2), w2(2, 2);
  w1 << 0.1, -0.2, 0.3, 0.4;
  w2 << 0.2, 0.1, -0.3, 0.25;
  net.weights = {w1, w2};
  net.biases = {Eigen::Vector2d(0.05, -0.05), Eigen::Vector2d(0.1, 0.0)};
  return net;
}

// Small in-memory dataset: two well-separated Gaussian blobs per class
// in 6 dimensions, labels 0..3.
frog::Dataset blob_dataset(int per_class, std::uint64_t seed) {
  frog::Xoshiro256pp rng(seed);
  const int classes = 4, dim = 6;
  const auto fill = [&](Eigen::MatrixXd& x, std::vector<int>& y, int count) {
    x.resize(count * classes, dim);
    y.resize(static_cast<std::size_t>(count) * classes);
    Eigen::Index row = 0;
    for (int c = 0; c < classes; ++c)
      for (int i = 0; i < count; ++i) {
        for (int d = 0; d < dim; ++d)
          x(row, d) = 0.5 * rng.gaussian() + (d % classes == c ? 2.0 : 0.0);
        y[static_cast<std::size_t>(row)] = c;
        ++row;
      }
  };
  frog::Dataset ds;
  ds.input_dim = dim;
  fill(ds.train_x, ds.train_y, per_class);
  fill(ds.val_x, ds.val_y, per_class / 2);
  fill(ds.test_x, ds.test_y, per_class / 2);
  return ds;
}

}  // namespace

TEST_CASE("forward pass matches the scripted oracle", "[nn]") {
  const Mlp net = hand_net();
  Eigen::MatrixXd x(1, 2);
  x << 1.0, -2.0;
  const auto fwd = frog::forward(net, x, {1});
  REQUIRE(fwd.act[0](0, 0) == Catch::Approx(0.55).margin(1e-15));
  REQUIRE(fwd.act[0](0, 1) == 0.0);  // ReLU clamps -0.55
  REQUIRE(fwd.act[1](0, 0) == Catch::Approx(0.21).margin(1e-15));
  REQUIRE(fwd.act[1](0, 1) == Catch::Approx(-0.165).margin(1e-15));
  REQUIRE(fwd.loss == Catch::Approx(0.89812326413984023).epsilon(1e-14));
}

TEST_CASE("uniform logits give ln(10) loss", "[nn]") {
  Mlp net = Mlp::kaiming_init({4, 8, 8, 10}, 1);
  for (auto& w : net.weights) w.setZero();
  Eigen::MatrixXd x(3, 4);
  x.setRandom();
  const auto fwd = frog::forward(net, x, {0, 5, 9});
  REQUIRE(fwd.loss == Catch::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("forward validates shapes and labels", "[nn]") {
  const Mlp net = hand_net();
  Eigen::MatrixXd bad(1, 3);
  bad.setZero();
  REQUIRE_THROWS_WITH(frog::forward(net, bad, {0}),
                      Catch::Matchers::ContainsSubstring("ShapeMismatch"));
  Eigen::MatrixXd x(1, 2);
  x.setZero();
  REQUIRE_THROWS_AS(frog::forward(net, x, {2}), frog::Error);
  REQUIRE_THROWS_AS(frog::forward(net, x, {0, 0}), frog::Error);
}

TEST_CASE("backprop matches the scripted oracle on the hand net", "[nn]") {
  const Mlp net = hand_net();
  Eigen::MatrixXd x(1, 2);
  x << 1.0, -2.0;
  const auto fwd = frog::forward(net, x, {1});
  const auto grads = frog::backprop(net, x, {1}, fwd);
  REQUIRE(grads.w[0](0, 0) == Catch::Approx(0.2963333).margin(1e-7));
  REQUIRE(grads.w[0](0, 1) == Catch::Approx(-0.5926666).margin(1e-7));
  REQUIRE(grads.w[0](1, 0) == 0.0);
  REQUIRE(grads.b[0](0) == Catch::Approx(0.2963333).margin(1e-7));
  REQUIRE(grads.w[1](0, 0) == Catch::Approx(0.32596663).margin(1e-7));
  REQUIRE(grads.w[1](1, 0) == Catch::Approx(-0.32596663).margin(1e-7));
  REQUIRE(grads.b[1](0) == Catch::Approx(0.5926666).margin(1e-7));
  REQUIRE(grads.b[1](1) == Catch::Approx(-0.5926666).margin(1e-7));
}

TEST_CASE("backprop matches finite differences on a 2-4-4-2 net", "[nn]") {
  for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    Mlp net = Mlp::kaiming_init({2, 4, 4, 2}, seed);
    Eigen::MatrixXd x(3, 2);
    x << 0.2, -1.1, 0.7, 0.4, -0.3, 0.9;
    const std::vector<int> y{0, 1, 0};
    const auto fwd = frog::forward(net, x, y);
    const auto grads = frog::backprop(net, x, y, fwd);

    const double h = 1e-6;
    for (int l = 0; l < net.depth(); ++l) {
      auto& w = net.weights[static_cast<std::size_t>(l)];
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
          const double keep = w(r, c);
          w(r, c) = keep + h;
          const double fp = frog::forward(net, x, y).loss;
          w(r, c) = keep - h;
          const double fm = frog::forward(net, x, y).loss;
          w(r, c) = keep;
          const double fd = (fp - fm) / (2.0 * h);
          REQUIRE(std::abs(grads.w[l](r, c) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
      auto& b = net.biases[static_cast<std::size_t>(l)];
      for (Eigen::Index r = 0; r < b.size(); ++r) {
        const double keep = b(r);
        b(r) = keep + h;
        const double fp = frog::forward(net, x, y).loss;
        b(r) = keep - h;
        const double fm = frog::forward(net, x, y).loss;
        b(r) = keep;
        const double fd = (fp - fm) / (2.0 * h);
        REQUIRE(std::abs(grads.b[l](r) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("zero input and zero bias give a zero first-layer weight gradient", "[nn]") {
  Mlp net = Mlp::kaiming_init({3, 4, 4, 2}, 9);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 3);
  const std::vector<int> y{0, 1, 0, 1, 1};
  const auto fwd = frog::forward(net, x, y);
  const auto grads = frog::backprop(net, x, y, fwd);
  REQUIRE(grads.w[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("logit gradients sum to zero per sample", "[nn]") {
  Mlp net = Mlp::kaiming_init({3, 5, 5, 4}, 13);
  Eigen::MatrixXd x(6, 3);
  x.setRandom();
  const std::vector<int> y{0, 1, 2, 3, 1, 2};
  const auto fwd = frog::forward(net, x, y);
  const auto grads = frog::backprop(net, x, y, fwd);
  const Eigen::VectorXd row_sums = grads.act.back().rowwise().sum();
  REQUIRE(row_sums.cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("projection with k equal to the site dimension recovers backprop", "[nn]") {
  Mlp net = Mlp::kaiming_init({2, 4, 4, 2}, 21);
  Eigen::MatrixXd x(3, 2);
  x << 0.5, -0.2, 1.2, 0.3, -0.7, -1.0;
  const std::vector<int> y{1, 0, 1};
  const auto fwd = frog::forward(net, x, y);
  const auto exact = frog::backprop(net, x, y, fwd);

  // Per-group site dimension is batch * width; estimate each group with a
  // square projection and compare every parameter gradient.
  for (int l = 0; l < net.depth(); ++l) {
    const Eigen::Index site = 3 * net.weights[static_cast<std::size_t>(l)].rows();
    const auto fg =
        frog::activity_forward_gradient(net, x, y, site, Combiner::projection, 31 + l);
    REQUIRE((fg.grads.w[l] - exact.w[l]).cwiseAbs().maxCoeff() <= 1e-6);
    REQUIRE((fg.grads.b[l] - exact.b[l]).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("k=1 activation estimate is colinear with its tangent", "[nn]") {
  Mlp net = Mlp::kaiming_init({2, 3, 3, 2}, 5);
  Eigen::MatrixXd x(2, 2);
  x << 0.4, -0.6, -1.0, 0.2;
  const std::vector<int> y{0, 1};
  const auto fg = frog::activity_forward_gradient(net, x, y, 1, Combiner::single, 7);
  for (int l = 0; l < net.depth(); ++l) {
    const Eigen::Map<const Eigen::VectorXd> g(fg.act_estimate[l].data(),
                                              fg.act_estimate[l].size());
    const Eigen::VectorXd v = fg.tangents[static_cast<std::size_t>(l)].matrix.col(0);
    // g = d * v exactly.
    REQUIRE((g - fg.derivs[l](0) * v).cwiseAbs().maxCoeff() <= 1e-12 * v.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("simulation and jvp modes agree", "[nn]") {
  Mlp net = Mlp::kaiming_init({2, 4, 4, 2}, 11);
  Eigen::MatrixXd x(4, 2);
  x << 0.5, -0.2, 1.2, 0.3, -0.7, -1.0, 0.1, 0.8;
  const std::vector<int> y{1, 0, 1, 1};
  for (const auto combiner : {Combiner::mean, Combiner::projection}) {
    const auto sim = frog::activity_forward_gradient(net, x, y, 3, combiner, 17,
                                                     FgMode::simulation);
    const auto jvp = frog::activity_forward_gradient(net, x, y, 3, combiner, 17, FgMode::jvp);
    for (int l = 0; l < net.depth(); ++l) {
      REQUIRE((sim.derivs[l] - jvp.derivs[l]).cwiseAbs().maxCoeff() <= 1e-8);
      REQUIRE((sim.grads.w[l] - jvp.grads.w[l]).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("activation estimates stay in the tangent span", "[nn]") {
  Mlp net = Mlp::kaiming_init({3, 4, 4, 3}, 23);
  Eigen::MatrixXd x(2, 3);
  x.setRandom();
  const std::vector<int> y{2, 0};
  const auto fg = frog::activity_forward_gradient(net, x, y, 2, Combiner::mean, 41);
  for (int l = 0; l < net.depth(); ++l) {
    const Eigen::Map<const Eigen::VectorXd> g(fg.act_estimate[l].data(),
                                              fg.act_estimate[l].size());
    const auto& v = fg.tangents[static_cast<std::size_t>(l)];
    const auto proj = frog::combine_projection(v, v.matrix.transpose() * g);
    REQUIRE((proj.g - g).norm() <= 1e-9 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("training at lr 0 leaves everything unchanged", "[nn]") {
  const auto ds = blob_dataset(8, 3);
  Mlp net = Mlp::kaiming_init({6, 8, 8, 10}, 2);
  const Mlp before = net;
  frog::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.epochs = 3;
  cfg.lr = 0.0;
  cfg.estimator = Estimator::exact;
  const auto result = frog::train(net, ds, cfg);
  for (int l = 0; l < net.depth(); ++l) {
    REQUIRE(net.weights[static_cast<std::size_t>(l)] ==
            before.weights[static_cast<std::size_t>(l)]);
    REQUIRE(net.biases[static_cast<std::size_t>(l)] == before.biases[static_cast<std::size_t>(l)]);
  }
  for (const auto& rec : result.history) {
    REQUIRE(rec.test_loss == result.history.front().test_loss);
    REQUIRE(rec.val_loss == result.history.front().val_loss);
  }
}

TEST_CASE("epochs=0 yields only the initial metrics row", "[nn]") {
  const auto ds = blob_dataset(4, 7);
  Mlp net = Mlp::kaiming_init({6, 8, 8, 10}, 4);
  frog::TrainConfig cfg;
  cfg.epochs = 0;
  cfg.lr = 0.1;
  const auto result = frog::train(net, ds, cfg);
  REQUIRE(result.history.size() == 1);
  REQUIRE(result.history.front().epoch == 0);
}

TEST_CASE("exact training reduces the loss and is deterministic", "[nn]") {
  const auto ds = blob_dataset(16, 5);
  frog::TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 10;
  cfg.lr = 0.05;
  cfg.estimator = Estimator::exact;
  cfg.seed = 1;

  Mlp net_a = Mlp::kaiming_init({6, 8, 8, 10}, 6);
  const auto a = frog::train(net_a, ds, cfg);
  REQUIRE_FALSE(a.diverged);
  REQUIRE(a.history.back().train_loss < a.history.front().train_loss);

  Mlp net_b = Mlp::kaiming_init({6, 8, 8, 10}, 6);
  const auto b = frog::train(net_b, ds, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    REQUIRE(a.history[i].train_loss == b.history[i].train_loss);
    REQUIRE(a.history[i].test_loss == b.history[i].test_loss);
  }
}

TEST_CASE("forward-gradient training improves over the start at desk scale", "[nn]") {
  const auto ds = blob_dataset(16, 9);
  frog::TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 12;
  cfg.lr = 0.05;
  cfg.estimator = Estimator::projection;
  cfg.k = 8;
  cfg.seed = 2;
  Mlp net = Mlp::kaiming_init({6, 8, 8, 10}, 8);
  const auto result = frog::train(net, ds, cfg);
  REQUIRE_FALSE(result.diverged);
  REQUIRE(result.history.back().train_loss < result.history.front().train_loss);
}

TEST_CASE("descent on a fixed batch with small exact steps is monotone", "[nn]") {
  Mlp net = Mlp::kaiming_init({4, 6, 6, 3}, 31);
  Eigen::MatrixXd x(8, 4);
  x.setRandom();
  const std::vector<int> y{0, 1, 2, 0, 1, 2, 0, 1};
  double prev = frog::forward(net, x, y).loss;
  for (int step = 0; step < 10; ++step) {
    const auto fwd = frog::forward(net, x, y);
    const auto grads = frog::backprop(net, x, y, fwd);
    for (int l = 0; l < net.depth(); ++l) {
      net.weights[static_cast<std::size_t>(l)] -= 0.01 * grads.w[l];
      net.biases[static_cast<std::size_t>(l)] -= 0.01 * grads.b[l];
    }
    const double now = frog::forward(net, x, y).loss;
    REQUIRE(now <= prev + 1e-12);
    prev = now;
  }
}

TEST_CASE("idx files round-trip", "[nn]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "frog_idx_test";
  fs::create_directories(dir);

  frog::Xoshiro256pp rng(55);
  Eigen::MatrixXd pixels(7, 28 * 28);
  for (Eigen::Index i = 0; i < pixels.rows(); ++i)
    for (Eigen::Index j = 0; j < pixels.cols(); ++j)
      pixels(i, j) = std::floor(rng.uniform01() * 256.0);
  std::vector<int> labels{0, 1, 2, 3, 4, 8, 9};

  const std::string img_path = (dir / "images-idx3-ubyte").string();
  const std::string lbl_path = (dir / "labels-idx1-ubyte").string();
  frog::write_idx_images(img_path, pixels, 28, 28);
  frog::write_idx_labels(lbl_path, labels);

  const auto imgs = frog::read_idx_images(img_path);
  REQUIRE(imgs.rows == 28);
  REQUIRE(imgs.cols == 28);
  REQUIRE(imgs.pixels == pixels);
  REQUIRE(frog::read_idx_labels(lbl_path) == labels);

  // Magic validation: labels are not images.
  REQUIRE_THROWS_WITH(frog::read_idx_images(lbl_path),
                      Catch::Matchers::ContainsSubstring("IDX image"));
  REQUIRE_THROWS_AS(frog::read_idx_labels(img_path), frog::Error);
  fs::remove_all(dir);
}

TEST_CASE("kaiming init stays inside the fan-in bound", "[nn]") {
  const Mlp net = Mlp::kaiming_init({100, 50, 10}, 3);
  const double limit0 = std::sqrt(6.0 / 100.0);
  REQUIRE(net.weights[0].cwiseAbs().maxCoeff() <= limit0);
  REQUIRE(net.weights[0].cwiseAbs().maxCoeff() > 0.5 * limit0);  // actually fills the range
  REQUIRE(net.biases[0] == Eigen::VectorXd::Zero(50));
  REQUIRE(net.parameter_count() == 100 * 50 + 50 + 50 * 10 + 10);
}
