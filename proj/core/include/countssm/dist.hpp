#pragma once

#include <cstdint>

#include "countssm/rng.hpp"

namespace countssm {

/// Gamma law with shape/rate parameterization.
///
/// A live law has shape > 0 and rate > 0. The point mass at zero, written
/// Gamma(0, rate) in the model notation, is a separate degenerate value built
/// with `GammaLaw::zero()`; it never stores a zero shape.
class GammaLaw {
 public:
  GammaLaw(double shape, double rate);

  static GammaLaw zero() noexcept { return GammaLaw(); }

  /// Builds a live law when shape > 0 and the point mass at zero when
  /// shape == 0. Negative shapes or non-positive rates are domain errors.
  static GammaLaw or_zero(double shape, double rate);

  bool degenerate() const noexcept { return degenerate_; }
  double shape() const noexcept { return shape_; }
  double rate() const noexcept { return rate_; }

  double mean() const noexcept { return degenerate_ ? 0.0 : shape_ / rate_; }
  double variance() const noexcept {
    return degenerate_ ? 0.0 : shape_ / (rate_ * rate_);
  }

  friend bool operator==(const GammaLaw&, const GammaLaw&) = default;

 private:
  GammaLaw() noexcept : shape_(0.0), rate_(1.0), degenerate_(true) {}

  double shape_;
  double rate_;
  bool degenerate_;
};

/// Beta law on (0, 1). Beta(a, 0) is the constant one and Beta(0, b) the
/// constant zero; both are tagged as degenerate.
class BetaLaw {
 public:
  enum class Kind { Proper, ConstantOne, ConstantZero };

  BetaLaw(double a, double b);

  Kind kind() const noexcept { return kind_; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double mean() const noexcept { return a_ / (a_ + b_); }

 private:
  double a_;
  double b_;
  Kind kind_;
};

/// Negative binomial law in mean/size form: variance = mean + mean^2 / size.
class NBLaw {
 public:
  NBLaw(double mean, double size);

  double mean() const noexcept { return mean_; }
  double size() const noexcept { return size_; }
  double variance() const noexcept { return mean_ + mean_ * mean_ / size_; }

 private:
  double mean_;
  double size_;
};

/// ln Gamma(x) for x > 0.
double log_gamma_fn(double x);

/// Log probability mass of the negative binomial at y.
double nb_log_pmf(std::int64_t y, const NBLaw& law);

/// Log density of Gamma(shape, rate) at x > 0.
double gamma_log_pdf(double x, const GammaLaw& law);

/// Poisson-gamma mixture probability P(Y = y) with Y | theta ~ Pois(intensity
/// * theta) and theta ~ Gamma(shape, rate), computed by adaptive quadrature.
/// Independent of `nb_log_pmf`; used to verify it. Throws OracleError when the
/// quadrature error estimate exceeds 1e-11.
double nb_pmf_oracle(std::int64_t y, double shape, double rate, double intensity);

double sample_gamma(const GammaLaw& law, Rng& rng);
double sample_beta(const BetaLaw& law, Rng& rng);
std::int64_t sample_poisson(double mean, Rng& rng);

}  // namespace countssm
