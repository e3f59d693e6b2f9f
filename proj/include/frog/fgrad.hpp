#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "frog/detail/linalg.hpp"
#include "frog/errors.hpp"
#include "frog/tangent.hpp"

namespace frog {

/// How directional derivatives are turned into a gradient estimate.
enum class Combiner { single, sum, mean, projection };

inline const char* combiner_name(Combiner c) {
  switch (c) {
    case Combiner::single: return "single";
    case Combiner::sum: return "sum";
    case Combiner::mean: return "mean";
    case Combiner::projection: return "projection";
  }
  return "?";
}

/// Gradient estimators available to the optimization and training loops:
/// the exact gradient or one of the forward-gradient combiners.
enum class Estimator { exact, single, sum, mean, projection };

inline const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::exact: return "exact";
    case Estimator::single: return "single";
    case Estimator::sum: return "sum";
    case Estimator::mean: return "mean";
    case Estimator::projection: return "projection";
  }
  return "?";
}

inline Estimator estimator_from_string(const std::string& s) {
  if (s == "exact") return Estimator::exact;
  if (s == "single") return Estimator::single;
  if (s == "sum") return Estimator::sum;
  if (s == "mean") return Estimator::mean;
  if (s == "projection") return Estimator::projection;
  raise(errc::bad_config, "unknown estimator '" + s + "'");
}

inline Combiner combiner_of(Estimator e) {
  switch (e) {
    case Estimator::single: return Combiner::single;
    case Estimator::sum: return Combiner::sum;
    case Estimator::mean: return Combiner::mean;
    case Estimator::projection: return Combiner::projection;
    case Estimator::exact: break;
  }
  raise(errc::bad_config, "exact estimator has no combiner");
}

/// A combined gradient estimate together with the directional derivatives
/// it was built from.
struct CombinedGradient {
  Eigen::VectorXd g;       // estimate in R^n
  Eigen::VectorXd derivs;  // the k values d_i = grad f . v_i
  Combiner combiner = Combiner::single;
};

/// Single-tangent forward gradient g = d * v.
inline CombinedGradient single(const Eigen::VectorXd& v, double d) {
  require(v.allFinite(), errc::non_finite, "tangent must be finite");
  CombinedGradient out;
  out.g = d * v;
  out.derivs = Eigen::VectorXd::Constant(1, d);
  out.combiner = Combiner::single;
  return out;
}

/// Sum combination g = V d (the k single-tangent estimates added up).
inline CombinedGradient combine_sum(const TangentSet& v, const Eigen::VectorXd& d) {
  require(d.size() == v.k(), errc::dimension_mismatch,
          "expected " + std::to_string(v.k()) + " directional derivatives, got " +
              std::to_string(d.size()));
  CombinedGradient out;
  out.g = v.matrix * d;
  out.derivs = d;
  out.combiner = Combiner::sum;
  return out;
}

/// Mean combination, the sum scaled by 1/k.
inline CombinedGradient combine_mean(const TangentSet& v, const Eigen::VectorXd& d) {
  CombinedGradient out = combine_sum(v, d);
  out.g /= static_cast<double>(v.k());
  out.combiner = Combiner::mean;
  return out;
}

/// Orthogonal projection of the gradient onto span(V), computed from the
/// directional derivatives alone: solve (V^T V) x = d, return g = V x.
///
/// The Gram system is factorized by Cholesky (no explicit inverse) and the
/// solve is iteratively refined with an extended-precision residual. For
/// k <= n a failed pivot throws RankDeficient; the caller may drop
/// dependent columns and retry. For k > n the Gram matrix is singular by
/// construction, so a rank-revealing pivoted Cholesky selects an
/// independent subset of tangents; the projection is unchanged because it
/// depends only on the spanned subspace.
inline CombinedGradient combine_projection(const TangentSet& v, const Eigen::VectorXd& d,
                                           double rank_tolerance = kDefaultRankTolerance) {
  const Eigen::Index n = v.n();
  const Eigen::Index k = v.k();
  require(d.size() == k, errc::dimension_mismatch,
          "expected " + std::to_string(k) + " directional derivatives, got " +
              std::to_string(d.size()));

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(v.matrix.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  const double max_diag = gram.diagonal().maxCoeff();

  CombinedGradient out;
  out.derivs = d;
  out.combiner = Combiner::projection;

  if (k <= n) {
    Eigen::MatrixXd lower;
    if (!detail::cholesky(gram, rank_tolerance * max_diag, lower))
      raise(errc::rank_deficient,
            "Gram matrix pivot fell below tolerance; tangents are not linearly independent");
    out.g = v.matrix * detail::solve_llt_refined(gram, lower, d);
    return out;
  }

  const auto pc = detail::pivoted_cholesky(gram, rank_tolerance);
  require(pc.rank >= 1, errc::rank_deficient, "tangent set spans nothing");
  const Eigen::Index r = pc.rank;
  Eigen::MatrixXd gram_sub(r, r);
  Eigen::VectorXd d_sub(r);
  Eigen::MatrixXd v_sub(n, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index pi = pc.permutation[static_cast<std::size_t>(i)];
    d_sub(i) = d(pi);
    v_sub.col(i) = v.matrix.col(pi);
    for (Eigen::Index j = 0; j < r; ++j)
      gram_sub(i, j) = gram(pi, pc.permutation[static_cast<std::size_t>(j)]);
  }
  const Eigen::MatrixXd lower_sub = pc.lower.topRows(r);
  out.g = v_sub * detail::solve_llt_refined(gram_sub, lower_sub, d_sub);
  return out;
}

/// Cosine similarity clamped to [-1, 1].
inline double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  require(a.size() == b.size(), errc::dimension_mismatch, "vector lengths differ");
  const double na = a.norm();
  const double nb = b.norm();
  require(na > 0.0 && nb > 0.0, errc::zero_vector, "cosine similarity of a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// |g| / |grad|.
inline double norm_ratio(const Eigen::VectorXd& g, const Eigen::VectorXd& grad) {
  require(g.size() == grad.size(), errc::dimension_mismatch, "vector lengths differ");
  const double denom = grad.norm();
  require(denom > 0.0, errc::zero_vector, "norm ratio against a zero gradient");
  return g.norm() / denom;
}

/// Estimator variants compared in the approximation-quality study: raw
/// tangents V, tangents normalized by their squared norm (W), and the
/// orthogonal projection.
enum class Variant { single, sum, mean, sum_norm, mean_norm, projection };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::single: return "single";
    case Variant::sum: return "sum";
    case Variant::mean: return "mean";
    case Variant::sum_norm: return "sum_norm";
    case Variant::mean_norm: return "mean_norm";
    case Variant::projection: return "projection";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "single") return Variant::single;
  if (s == "sum") return Variant::sum;
  if (s == "mean") return Variant::mean;
  if (s == "sum_norm") return Variant::sum_norm;
  if (s == "mean_norm") return Variant::mean_norm;
  if (s == "projection") return Variant::projection;
  raise(errc::bad_config, "unknown combiner variant '" + s + "'");
}

inline const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::single,   Variant::sum,       Variant::mean,
                                      Variant::sum_norm, Variant::mean_norm, Variant::projection};
  return v;
}

/// One measurement of estimate quality against a known gradient.
struct QualityRecord {
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  Variant variant = Variant::single;
  std::uint64_t seed = 0;  // seed index within the sweep
  double cosine = 0.0;
  double norm_ratio = 0.0;
};

/// Evaluate one variant on a Gaussian tangent set against a known gradient.
/// Directional derivatives are computed directly as V^T grad (or W^T grad
/// for the normalized variants), exactly what a forward sweep would return.
inline CombinedGradient combine_variant(Variant variant, const TangentSet& v,
                                        const Eigen::VectorXd& grad,
                                        double rank_tolerance = kDefaultRankTolerance) {
  switch (variant) {
    case Variant::single: {
      const Eigen::VectorXd v1 = v.matrix.col(0);
      return single(v1, grad.dot(v1));
    }
    case Variant::sum: return combine_sum(v, v.matrix.transpose() * grad);
    case Variant::mean: return combine_mean(v, v.matrix.transpose() * grad);
    case Variant::sum_norm: {
      const TangentSet w = normalize_paper(v);
      return combine_sum(w, w.matrix.transpose() * grad);
    }
    case Variant::mean_norm: {
      const TangentSet w = normalize_paper(v);
      return combine_mean(w, w.matrix.transpose() * grad);
    }
    case Variant::projection:
      return combine_projection(v, v.matrix.transpose() * grad, rank_tolerance);
  }
  raise(errc::bad_config, "unhandled variant");
}

/// Quality sweep over (k, variant, seed). Tangents for seed index s are
/// drawn with derive_seed(base_seed, s); the same draw is shared by all
/// variants and, because Gaussian sampling is prefix-stable in k, smaller k
/// use a prefix of the columns drawn for larger k.
inline std::vector<QualityRecord> approx_quality_sweep(
    Eigen::Index n, const std::vector<Eigen::Index>& k_list, const std::vector<Variant>& variants,
    int seeds, const Eigen::VectorXd& grad, std::uint64_t base_seed = 0,
    double rank_tolerance = kDefaultRankTolerance) {
  require(grad.size() == n, errc::dimension_mismatch, "gradient length must equal n");
  require(grad.norm() > 0.0, errc::zero_vector, "quality sweep needs a nonzero gradient");
  require(seeds >= 1, errc::bad_config, "quality sweep needs at least one seed");

  std::vector<QualityRecord> records;
  records.reserve(static_cast<std::size_t>(seeds) * k_list.size() * variants.size());
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = derive_seed(base_seed, static_cast<std::uint64_t>(s));
    for (const Eigen::Index k : k_list) {
      const TangentSet v = sample_gaussian(n, k, seed);
      for (const Variant variant : variants) {
        const CombinedGradient cg = combine_variant(variant, v, grad, rank_tolerance);
        QualityRecord rec;
        rec.n = n;
        rec.k = k;
        rec.variant = variant;
        rec.seed = static_cast<std::uint64_t>(s);
        rec.cosine = cosine_similarity(cg.g, grad);
        rec.norm_ratio = norm_ratio(cg.g, grad);
        records.push_back(rec);
      }
    }
  }
  return records;
}

/// Mean and standard error of the quality metrics, grouped by (k, variant).
struct QualityStats {
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  Variant variant = Variant::single;
  int count = 0;
  double mean_cosine = 0.0;
  double se_cosine = 0.0;
  double mean_norm_ratio = 0.0;
  double se_norm_ratio = 0.0;
};

inline std::vector<QualityStats> summarize_quality(const std::vector<QualityRecord>& records) {
  struct Accum {
    Eigen::Index n = 0;
    int count = 0;
    double c = 0, c2 = 0, r = 0, r2 = 0;
  };
  std::vector<std::pair<std::pair<Eigen::Index, Variant>, Accum>> groups;
  for (const auto& rec : records) {
    const std::pair<Eigen::Index, Variant> key{rec.k, rec.variant};
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    auto& a = it->second;
    a.n = rec.n;
    a.count += 1;
    a.c += rec.cosine;
    a.c2 += rec.cosine * rec.cosine;
    a.r += rec.norm_ratio;
    a.r2 += rec.norm_ratio * rec.norm_ratio;
  }
  std::vector<QualityStats> out;
  out.reserve(groups.size());
  for (const auto& [key, a] : groups) {
    QualityStats qs;
    qs.n = a.n;
    qs.k = key.first;
    qs.variant = key.second;
    qs.count = a.count;
    qs.mean_cosine = a.c / a.count;
    qs.mean_norm_ratio = a.r / a.count;
    if (a.count > 1) {
      const double var_c = std::max(0.0, (a.c2 - a.c * a.c / a.count) / (a.count - 1));
      const double var_r = std::max(0.0, (a.r2 - a.r * a.r / a.count) / (a.count - 1));
      qs.se_cosine = std::sqrt(var_c / a.count);
      qs.se_norm_ratio = std::sqrt(var_r / a.count);
    }
    out.push_back(qs);
  }
  std::sort(out.begin(), out.end(), [](const QualityStats& a, const QualityStats& b) {
    if (a.k != b.k) return a.k < b.k;
    return static_cast<int>(a.variant) < static_cast<int>(b.variant);
  });
  return out;
}

}  // namespace frog
