#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "frog/errors.hpp"

namespace frog {

// IDX file format as used by the MNIST distribution: big-endian magic and
// dimension sizes, then raw unsigned bytes. Images use magic 0x00000803
// (3 dimensions), labels 0x00000801 (1 dimension).

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Standard MNIST normalization constants (mean and standard deviation of
// the full training set in [0, 1] scale).
inline constexpr double kMnistMean = 0.1307;
inline constexpr double kMnistStd = 0.3081;

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  require(static_cast<bool>(in), errc::io_error, "unexpected end of file in " + path);
  return (std::uint32_t{buf[0]} << 24) | (std::uint32_t{buf[1]} << 16) |
         (std::uint32_t{buf[2]} << 8) | std::uint32_t{buf[3]};
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace detail

/// Raw images from an IDX file: one row per image, pixel values 0..255.
struct IdxImages {
  Eigen::MatrixXd pixels;  // count x (rows*cols)
  int rows = 0;
  int cols = 0;
};

inline IdxImages read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), errc::io_error, "cannot open " + path);
  const std::uint32_t magic = detail::read_be32(in, path);
  require(magic == kIdxImagesMagic, errc::io_error,
          path + " is not an IDX image file (magic " + std::to_string(magic) + ")");
  const auto count = static_cast<Eigen::Index>(detail::read_be32(in, path));
  const int rows = static_cast<int>(detail::read_be32(in, path));
  const int cols = static_cast<int>(detail::read_be32(in, path));
  const Eigen::Index dim = static_cast<Eigen::Index>(rows) * cols;

  std::vector<unsigned char> buf(static_cast<std::size_t>(count * dim));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(in), errc::io_error, "truncated image data in " + path);

  IdxImages out;
  out.rows = rows;
  out.cols = cols;
  out.pixels.resize(count, dim);
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      out.pixels(i, j) = static_cast<double>(buf[static_cast<std::size_t>(i * dim + j)]);
  return out;
}

inline std::vector<int> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), errc::io_error, "cannot open " + path);
  const std::uint32_t magic = detail::read_be32(in, path);
  require(magic == kIdxLabelsMagic, errc::io_error,
          path + " is not an IDX label file (magic " + std::to_string(magic) + ")");
  const auto count = detail::read_be32(in, path);

  std::vector<unsigned char> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(in), errc::io_error, "truncated label data in " + path);
  return std::vector<int>(buf.begin(), buf.end());
}

/// Write images (values clamped and rounded to 0..255) in IDX format.
inline void write_idx_images(const std::string& path, const Eigen::MatrixXd& pixels, int rows,
                             int cols) {
  require(pixels.cols() == static_cast<Eigen::Index>(rows) * cols, errc::shape_mismatch,
          "pixel column count must equal rows*cols");
  std::ofstream out(path, std::ios::binary);
  require(out.is_open(), errc::io_error, "cannot open " + path + " for writing");
  detail::write_be32(out, kIdxImagesMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(pixels.rows()));
  detail::write_be32(out, static_cast<std::uint32_t>(rows));
  detail::write_be32(out, static_cast<std::uint32_t>(cols));
  std::vector<unsigned char> buf(static_cast<std::size_t>(pixels.size()));
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < pixels.rows(); ++i)
    for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
      const double v = std::min(255.0, std::max(0.0, pixels(i, j)));
      buf[idx++] = static_cast<unsigned char>(std::lround(v));
    }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(out), errc::io_error, "failed writing " + path);
}

inline void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  require(out.is_open(), errc::io_error, "cannot open " + path + " for writing");
  detail::write_be32(out, kIdxLabelsMagic);
  detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
  std::vector<unsigned char> buf;
  buf.reserve(labels.size());
  for (const int label : labels) {
    require(label >= 0 && label <= 255, errc::bad_config, "label out of byte range");
    buf.push_back(static_cast<unsigned char>(label));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(out), errc::io_error, "failed writing " + path);
}

/// A train/validation/test split with normalized inputs, rows = samples.
struct Dataset {
  Eigen::MatrixXd train_x, val_x, test_x;
  std::vector<int> train_y, val_y, test_y;
  int input_dim = 0;
};

namespace detail {

inline Eigen::MatrixXd normalize_pixels(const Eigen::MatrixXd& raw) {
  return ((raw / 255.0).array() - kMnistMean) / kMnistStd;
}

}  // namespace detail

/// Load an MNIST-style directory (train-images-idx3-ubyte & friends) and
/// split: the first n_train training samples for training, the next n_val
/// for validation, and the first n_test of the t10k pair for testing.
/// Pixels are scaled to [0,1] and normalized with the MNIST constants.
inline Dataset load_mnist_split(const std::string& dir, Eigen::Index n_train, Eigen::Index n_val,
                                Eigen::Index n_test) {
  const IdxImages train_imgs = read_idx_images(dir + "/train-images-idx3-ubyte");
  const std::vector<int> train_labels = read_idx_labels(dir + "/train-labels-idx1-ubyte");
  const IdxImages test_imgs = read_idx_images(dir + "/t10k-images-idx3-ubyte");
  const std::vector<int> test_labels = read_idx_labels(dir + "/t10k-labels-idx1-ubyte");

  require(train_imgs.pixels.rows() == static_cast<Eigen::Index>(train_labels.size()),
          errc::shape_mismatch, "train image/label counts differ");
  require(test_imgs.pixels.rows() == static_cast<Eigen::Index>(test_labels.size()),
          errc::shape_mismatch, "test image/label counts differ");
  require(train_imgs.pixels.rows() >= n_train + n_val, errc::bad_config,
          "train file has too few samples for the requested split");
  require(test_imgs.pixels.rows() >= n_test, errc::bad_config,
          "test file has too few samples for the requested split");

  Dataset ds;
  ds.input_dim = train_imgs.rows * train_imgs.cols;
  const Eigen::MatrixXd train_norm = detail::normalize_pixels(train_imgs.pixels);
  const Eigen::MatrixXd test_norm = detail::normalize_pixels(test_imgs.pixels);

  ds.train_x = train_norm.topRows(n_train);
  ds.val_x = train_norm.middleRows(n_train, n_val);
  ds.test_x = test_norm.topRows(n_test);
  ds.train_y.assign(train_labels.begin(), train_labels.begin() + n_train);
  ds.val_y.assign(train_labels.begin() + n_train, train_labels.begin() + n_train + n_val);
  ds.test_y.assign(test_labels.begin(), test_labels.begin() + n_test);
  return ds;
}

}  // namespace frog
