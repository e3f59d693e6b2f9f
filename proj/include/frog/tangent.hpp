#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "frog/detail/linalg.hpp"
#include "frog/errors.hpp"
#include "frog/rng.hpp"

namespace frog {

enum class Sampler { gaussian, normalized, rademacher, basis, cone };

inline const char* sampler_name(Sampler s) {
  switch (s) {
    case Sampler::gaussian: return "gaussian";
    case Sampler::normalized: return "normalized";
    case Sampler::rademacher: return "rademacher";
    case Sampler::basis: return "basis";
    case Sampler::cone: return "cone";
  }
  return "?";
}

inline Sampler sampler_from_string(const std::string& s) {
  if (s == "gaussian") return Sampler::gaussian;
  if (s == "normalized") return Sampler::normalized;
  if (s == "rademacher") return Sampler::rademacher;
  if (s == "basis") return Sampler::basis;
  if (s == "cone") return Sampler::cone;
  raise(errc::bad_config, "unknown tangent sampler '" + s + "'");
}

/// A set of k tangent directions in R^n, stored as the columns of an n x k
/// matrix, together with how it was drawn.
struct TangentSet {
  Eigen::MatrixXd matrix;  // n x k, column i is tangent v_i
  Sampler sampler = Sampler::gaussian;
  std::uint64_t seed = 0;
  std::optional<double> alpha_deg;  // cone sampler only

  Eigen::Index n() const { return matrix.rows(); }
  Eigen::Index k() const { return matrix.cols(); }
};

inline constexpr double kDefaultRankTolerance = 1e-10;

/// iid standard normal tangents. The matrix is filled column by column from
/// one generator stream, so for a fixed (n, seed) the k-column draw is a
/// prefix of any wider draw.
inline TangentSet sample_gaussian(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  require(n >= 1 && k >= 1, errc::bad_dimension, "sample_gaussian requires n >= 1 and k >= 1");
  TangentSet out{Eigen::MatrixXd(n, k), Sampler::gaussian, seed, std::nullopt};
  Xoshiro256pp rng(seed);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index r = 0; r < n; ++r) out.matrix(r, c) = rng.gaussian();
  return out;
}

/// Scale each column by the inverse of its squared norm: w_i = v_i / |v_i|^2.
/// Note this is not unit normalization; |w_i| = 1 / |v_i|.
inline TangentSet normalize_paper(const TangentSet& v) {
  TangentSet out = v;
  out.sampler = Sampler::normalized;
  for (Eigen::Index c = 0; c < v.k(); ++c) {
    const double norm = v.matrix.col(c).norm();
    require(norm >= 1e-300, errc::zero_tangent, "cannot normalize a zero tangent");
    out.matrix.col(c) /= norm * norm;
  }
  return out;
}

/// Unit normalization w_i = v_i / |v_i|, provided as a separate option.
inline TangentSet normalize_unit(const TangentSet& v) {
  TangentSet out = v;
  out.sampler = Sampler::normalized;
  for (Eigen::Index c = 0; c < v.k(); ++c) {
    const double norm = v.matrix.col(c).norm();
    require(norm >= 1e-300, errc::zero_tangent, "cannot normalize a zero tangent");
    out.matrix.col(c) /= norm;
  }
  return out;
}

/// iid entries in {-1, +1} with probability 1/2 each.
inline TangentSet sample_rademacher(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  require(n >= 1 && k >= 1, errc::bad_dimension, "sample_rademacher requires n >= 1 and k >= 1");
  TangentSet out{Eigen::MatrixXd(n, k), Sampler::rademacher, seed, std::nullopt};
  Xoshiro256pp rng(seed);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index r = 0; r < n; ++r) out.matrix(r, c) = rng.flip() ? 1.0 : -1.0;
  return out;
}

/// k distinct standard basis vectors, chosen uniformly without replacement
/// by a partial Fisher-Yates shuffle. k = n yields a random permutation of
/// the identity columns.
inline TangentSet standard_basis(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  require(n >= 1 && k >= 1, errc::bad_dimension, "standard_basis requires n >= 1 and k >= 1");
  require(k <= n, errc::k_too_large, "standard_basis requires k <= n");
  TangentSet out{Eigen::MatrixXd::Zero(n, k), Sampler::basis, seed, std::nullopt};
  Xoshiro256pp rng(seed);
  std::vector<Eigen::Index> index(static_cast<std::size_t>(n));
  std::iota(index.begin(), index.end(), Eigen::Index{0});
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto j = c + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - c)));
    std::swap(index[static_cast<std::size_t>(c)], index[static_cast<std::size_t>(j)]);
    out.matrix(index[static_cast<std::size_t>(c)], c) = 1.0;
  }
  return out;
}

/// Tangents on a fixed-angle cone. v_1 ~ N(0, I_n); each later tangent
/// starts from an independent draw u_i ~ N(0, I_n) which is rotated in the
/// plane spanned by v_1 and u_i until its angle to v_1 is alpha. The
/// rotation preserves |u_i| and, because sin(alpha) != 0 on (0, 180), the
/// span of the set equals span(v_1, u_2, ..., u_k) regardless of alpha.
///
/// The generator stream is consumed identically for every alpha, so a fixed
/// (n, k, seed) uses the same underlying draws across angles.
inline TangentSet sample_cone(Eigen::Index n, Eigen::Index k, double alpha_deg,
                              std::uint64_t seed) {
  require(n >= 2, errc::bad_dimension, "sample_cone requires n >= 2");
  require(k >= 2, errc::bad_dimension, "sample_cone requires k >= 2");
  require(alpha_deg > 0.0 && alpha_deg < 180.0, errc::bad_angle,
          "cone angle must lie strictly between 0 and 180 degrees");

  TangentSet out{Eigen::MatrixXd(n, k), Sampler::cone, seed, alpha_deg};
  Xoshiro256pp rng(seed);
  const double alpha = alpha_deg * std::numbers::pi / 180.0;
  const double cos_a = std::cos(alpha);
  const double sin_a = std::sin(alpha);

  Eigen::VectorXd v1(n);
  for (Eigen::Index r = 0; r < n; ++r) v1(r) = rng.gaussian();
  out.matrix.col(0) = v1;
  const Eigen::VectorXd v1_hat = v1 / v1.norm();

  Eigen::VectorXd u(n);
  for (Eigen::Index c = 1; c < k; ++c) {
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
      for (Eigen::Index r = 0; r < n; ++r) u(r) = rng.gaussian();
      const Eigen::VectorXd w = u - (u.dot(v1_hat)) * v1_hat;
      const double w_norm = w.norm();
      if (w_norm > 1e-12 * u.norm()) {
        out.matrix.col(c) = u.norm() * (cos_a * v1_hat + sin_a * (w / w_norm));
        accepted = true;
      }
    }
    require(accepted, errc::degenerate_draw,
            "cone tangent draw stayed numerically parallel to v1 after 100 attempts");
  }
  return out;
}

/// Gram matrix V^T V with a Cholesky-based rank check.
struct GramInfo {
  Eigen::MatrixXd gram;       // k x k, exactly symmetric
  bool rank_ok = false;       // all Cholesky pivots above rank_tolerance * max diagonal
  double condition_estimate = 0.0;
};

inline GramInfo gram_info(const TangentSet& v, double rank_tolerance = kDefaultRankTolerance) {
  const Eigen::Index k = v.k();
  GramInfo info;
  info.gram = Eigen::MatrixXd::Zero(k, k);
  info.gram.selfadjointView<Eigen::Lower>().rankUpdate(v.matrix.transpose());
  info.gram = info.gram.selfadjointView<Eigen::Lower>();

  const double max_diag = info.gram.diagonal().maxCoeff();
  Eigen::MatrixXd lower;
  info.rank_ok = detail::cholesky(info.gram, rank_tolerance * max_diag, lower);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info.gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  info.condition_estimate = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return info;
}

}  // namespace frog
