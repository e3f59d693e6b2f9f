#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "frog/errors.hpp"
#include "frog/tangent.hpp"

namespace frog {

/// Scalar for multi-tangent forward-mode AD: a primal value plus k tangent
/// components. One evaluation of an expression over MultiDual propagates
/// all k directional derivatives at once.
///
/// A MultiDual built from a plain double is a constant: its tangent vector
/// is empty and acts as zero against any k. Mixing two non-constant
/// operands of different k throws DimensionMismatch; arithmetic never
/// changes k.
///
/// Every primitive checks its primal result for NaN/Inf and throws
/// NonFinite immediately. Tangent components are validated at the end of a
/// propagate() sweep (non-finite tangents propagate as NaN and cannot
/// silently disappear, except through the ReLU cutoff).
struct MultiDual {
  double value = 0.0;
  Eigen::VectorXd tangent;  // size k, or empty for constants

  MultiDual() = default;
  MultiDual(double v) : value(v) {}  // NOLINT: implicit by design, lets doubles mix in
  MultiDual(double v, Eigen::VectorXd t) : value(v), tangent(std::move(t)) {}

  bool is_constant() const { return tangent.size() == 0; }
};

namespace detail {

inline double finite_or_throw(double v, const char* op) {
  if (!std::isfinite(v)) raise(errc::non_finite, std::string("non-finite result in ") + op);
  return v;
}

inline void check_same_k(const MultiDual& a, const MultiDual& b, const char* op) {
  if (!a.is_constant() && !b.is_constant() && a.tangent.size() != b.tangent.size())
    raise(errc::dimension_mismatch,
          std::string("tangent widths differ in ") + op + ": " + std::to_string(a.tangent.size()) +
              " vs " + std::to_string(b.tangent.size()));
}

}  // namespace detail

inline MultiDual operator+(const MultiDual& a, const MultiDual& b) {
  detail::check_same_k(a, b, "+");
  MultiDual out(detail::finite_or_throw(a.value + b.value, "+"));
  if (a.is_constant())
    out.tangent = b.tangent;
  else if (b.is_constant())
    out.tangent = a.tangent;
  else
    out.tangent = a.tangent + b.tangent;
  return out;
}

inline MultiDual operator-(const MultiDual& a) {
  return {-a.value, -a.tangent};
}

inline MultiDual operator-(const MultiDual& a, const MultiDual& b) {
  detail::check_same_k(a, b, "-");
  MultiDual out(detail::finite_or_throw(a.value - b.value, "-"));
  if (a.is_constant())
    out.tangent = -b.tangent;
  else if (b.is_constant())
    out.tangent = a.tangent;
  else
    out.tangent = a.tangent - b.tangent;
  return out;
}

inline MultiDual operator*(const MultiDual& a, const MultiDual& b) {
  detail::check_same_k(a, b, "*");
  MultiDual out(detail::finite_or_throw(a.value * b.value, "*"));
  if (a.is_constant())
    out.tangent = a.value * b.tangent;
  else if (b.is_constant())
    out.tangent = b.value * a.tangent;
  else
    out.tangent = a.tangent * b.value + b.tangent * a.value;
  return out;
}

inline MultiDual operator/(const MultiDual& a, const MultiDual& b) {
  detail::check_same_k(a, b, "/");
  if (b.value == 0.0) raise(errc::non_finite, "division by zero");
  MultiDual out(detail::finite_or_throw(a.value / b.value, "/"));
  if (a.is_constant() && b.is_constant()) return out;
  const double inv = 1.0 / b.value;
  if (a.is_constant())
    out.tangent = (-a.value * inv * inv) * b.tangent;
  else if (b.is_constant())
    out.tangent = inv * a.tangent;
  else
    out.tangent = inv * a.tangent - (a.value * inv * inv) * b.tangent;
  return out;
}

inline MultiDual operator+(const MultiDual& a, double b) { return a + MultiDual(b); }
inline MultiDual operator+(double a, const MultiDual& b) { return MultiDual(a) + b; }
inline MultiDual operator-(const MultiDual& a, double b) { return a - MultiDual(b); }
inline MultiDual operator-(double a, const MultiDual& b) { return MultiDual(a) - b; }
inline MultiDual operator*(const MultiDual& a, double b) { return a * MultiDual(b); }
inline MultiDual operator*(double a, const MultiDual& b) { return MultiDual(a) * b; }
inline MultiDual operator/(const MultiDual& a, double b) { return a / MultiDual(b); }
inline MultiDual operator/(double a, const MultiDual& b) { return MultiDual(a) / b; }

inline MultiDual exp(const MultiDual& a) {
  const double e = detail::finite_or_throw(std::exp(a.value), "exp");
  return {e, e * a.tangent};
}

inline MultiDual log(const MultiDual& a) {
  if (!(a.value > 0.0)) raise(errc::non_finite, "log of non-positive value");
  return {std::log(a.value), (1.0 / a.value) * a.tangent};
}

/// Power with a constant exponent. Negative bases are only valid for
/// integer exponents; zero bases require p >= 1 for a finite tangent rule.
inline MultiDual pow(const MultiDual& a, double p) {
  const bool integral = std::floor(p) == p;
  if (a.value < 0.0 && !integral)
    raise(errc::non_finite, "pow of a negative base with a non-integer exponent");
  if (a.value == 0.0 && p < 1.0 && !(p == 0.0))
    raise(errc::non_finite, "pow tangent rule undefined at zero base with exponent < 1");
  const double v = detail::finite_or_throw(std::pow(a.value, p), "pow");
  if (p == 0.0) return {v, Eigen::VectorXd::Zero(a.tangent.size())};
  const double slope = (a.value == 0.0) ? 0.0 : p * std::pow(a.value, p - 1.0);
  return {v, detail::finite_or_throw(slope, "pow") * a.tangent};
}

/// max(x, 0) with the tangent defined as 0 at the kink.
inline MultiDual relu(const MultiDual& a) {
  if (a.value > 0.0) return a;
  return {0.0, Eigen::VectorXd::Zero(a.tangent.size())};
}

/// Sum reduction over a span.
inline MultiDual sum(std::span<const MultiDual> xs) {
  Eigen::Index k = 0;
  for (const auto& x : xs)
    if (!x.is_constant()) {
      k = x.tangent.size();
      break;
    }
  double value = 0.0;
  Eigen::VectorXd tangent = Eigen::VectorXd::Zero(k);
  for (const auto& x : xs) {
    value += x.value;
    if (!x.is_constant()) {
      if (x.tangent.size() != k)
        raise(errc::dimension_mismatch, "tangent widths differ in sum reduction");
      tangent += x.tangent;
    }
  }
  return {detail::finite_or_throw(value, "sum"), std::move(tangent)};
}

/// Dot product of two MultiDual vectors.
inline MultiDual dot(std::span<const MultiDual> a, std::span<const MultiDual> b) {
  require(a.size() == b.size(), errc::dimension_mismatch, "dot operand lengths differ");
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_constant()) { k = a[i].tangent.size(); break; }
    if (!b[i].is_constant()) { k = b[i].tangent.size(); break; }
  }
  double value = 0.0;
  Eigen::VectorXd tangent = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < a.size(); ++i) {
    detail::check_same_k(a[i], b[i], "dot");
    value += a[i].value * b[i].value;
    if (!a[i].is_constant()) tangent += b[i].value * a[i].tangent;
    if (!b[i].is_constant()) tangent += a[i].value * b[i].tangent;
  }
  return {detail::finite_or_throw(value, "dot"), std::move(tangent)};
}

/// Dot product against a constant vector.
inline MultiDual dot(std::span<const MultiDual> a, const Eigen::VectorXd& w) {
  require(static_cast<Eigen::Index>(a.size()) == w.size(), errc::dimension_mismatch,
          "dot operand lengths differ");
  Eigen::Index k = 0;
  for (const auto& x : a)
    if (!x.is_constant()) { k = x.tangent.size(); break; }
  double value = 0.0;
  Eigen::VectorXd tangent = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < a.size(); ++i) {
    value += a[i].value * w(static_cast<Eigen::Index>(i));
    if (!a[i].is_constant()) tangent += w(static_cast<Eigen::Index>(i)) * a[i].tangent;
  }
  return {detail::finite_or_throw(value, "dot"), std::move(tangent)};
}

/// Matrix-vector product with a constant matrix.
inline std::vector<MultiDual> matvec(const Eigen::MatrixXd& m, std::span<const MultiDual> x) {
  require(m.cols() == static_cast<Eigen::Index>(x.size()), errc::dimension_mismatch,
          "matvec operand shapes differ");
  std::vector<MultiDual> out;
  out.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    out.push_back(dot(x, Eigen::VectorXd(m.row(r).transpose())));
  return out;
}

/// Primal point plus the tangent payload for one JVP sweep.
struct DualBatch {
  Eigen::VectorXd primal;   // theta, length n
  Eigen::MatrixXd payload;  // n x k tangent seeds

  Eigen::Index n() const { return primal.size(); }
  Eigen::Index k() const { return payload.cols(); }
};

inline DualBatch lift(const Eigen::VectorXd& theta, const Eigen::MatrixXd& payload) {
  require(payload.rows() == theta.size(), errc::dimension_mismatch,
          "tangent payload has " + std::to_string(payload.rows()) + " rows, point has " +
              std::to_string(theta.size()));
  require(payload.cols() >= 1, errc::bad_dimension, "payload needs at least one column");
  require(payload.allFinite() && theta.allFinite(), errc::non_finite,
          "lift requires finite inputs");
  return {theta, payload};
}

inline DualBatch lift(const Eigen::VectorXd& theta, const TangentSet& v) {
  return lift(theta, v.matrix);
}

/// Result of one forward sweep: f(theta) and the k directional derivatives
/// (gradient dotted with each tangent column).
struct Jvp {
  double value = 0.0;
  Eigen::VectorXd derivs;  // length k
};

/// Evaluate a scalar expression over MultiDual variables seeded from the
/// batch. `expr` receives one MultiDual per component of theta, with row i
/// of the payload as its tangent.
template <class F>
Jvp propagate(F&& expr, const DualBatch& batch) {
  const Eigen::Index n = batch.n();
  const Eigen::Index k = batch.k();
  std::vector<MultiDual> vars;
  vars.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    vars.emplace_back(batch.primal(i), Eigen::VectorXd(batch.payload.row(i).transpose()));

  const MultiDual out = expr(std::span<const MultiDual>(vars));
  if (!std::isfinite(out.value)) raise(errc::non_finite, "expression value is not finite");

  Jvp jvp;
  jvp.value = out.value;
  jvp.derivs = out.is_constant() ? Eigen::VectorXd::Zero(k) : out.tangent;
  require(jvp.derivs.size() == k, errc::dimension_mismatch,
          "expression produced tangent width " + std::to_string(jvp.derivs.size()) +
              ", expected " + std::to_string(k));
  require(jvp.derivs.allFinite(), errc::non_finite, "directional derivatives are not finite");
  return jvp;
}

/// Central finite difference (f(theta + h v) - f(theta - h v)) / (2h);
/// the numerical oracle the JVP path is tested against.
template <class F>
double fd_directional(F&& f, const Eigen::VectorXd& theta, const Eigen::VectorXd& v, double h) {
  require(h > 0.0, errc::bad_config, "finite-difference step must be positive");
  require(theta.size() == v.size(), errc::dimension_mismatch,
          "point and direction lengths differ");
  const double fp = f(Eigen::VectorXd(theta + h * v));
  const double fm = f(Eigen::VectorXd(theta - h * v));
  const double d = (fp - fm) / (2.0 * h);
  if (!std::isfinite(d)) raise(errc::non_finite, "finite difference overflowed");
  return d;
}

}  // namespace frog
