#include "countssm/regimes.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "countssm/errors.hpp"

namespace countssm {

namespace {

constexpr std::array<std::pair<RegimeKind, std::string_view>, 7> kNames{{
    {RegimeKind::Independent, "independent"},
    {RegimeKind::Shared, "shared"},
    {RegimeKind::Increasing, "increasing"},
    {RegimeKind::Decreasing, "decreasing"},
    {RegimeKind::Converging, "converging"},
    {RegimeKind::Bounded, "bounded"},
    {RegimeKind::ConstantVariance, "constant_variance"},
}};

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

bool in_unit_open_closed(double x) { return x > 0.0 && x <= 1.0; }
bool in_unit_closed(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string_view to_string(RegimeKind kind) noexcept {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<RegimeKind> parse_regime_kind(std::string_view name) noexcept {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  if (name == "constant") return RegimeKind::ConstantVariance;
  return std::nullopt;
}

std::vector<RegimeKind> all_regime_kinds() {
  std::vector<RegimeKind> out;
  for (const auto& entry : kNames) out.push_back(entry.first);
  return out;
}

RegimeSpec RegimeSpec::independent(double beta0) {
  return {RegimeKind::Independent, 0.0, 1.0, beta0};
}
RegimeSpec RegimeSpec::shared(double beta0) {
  return {RegimeKind::Shared, 1.0, 1.0, beta0};
}
RegimeSpec RegimeSpec::increasing(double beta0, double q) {
  return {RegimeKind::Increasing, 1.0, q, beta0};
}
RegimeSpec RegimeSpec::decreasing(double beta0, double p) {
  return {RegimeKind::Decreasing, p, 1.0, beta0};
}
RegimeSpec RegimeSpec::converging(double beta0, double p, double q) {
  return {RegimeKind::Converging, p, q, beta0};
}
RegimeSpec RegimeSpec::bounded(double beta0, double p, double q) {
  return {RegimeKind::Bounded, p, q, beta0};
}
RegimeSpec RegimeSpec::constant_variance(double beta0, double p) {
  return {RegimeKind::ConstantVariance, p, 1.0, beta0};
}

void RegimeSpec::validate() const {
  const std::string name(to_string(kind));
  require(beta0 > 0.0 && std::isfinite(beta0),
          name + ": beta0 must be > 0 (got " + std::to_string(beta0) + ")");
  switch (kind) {
    case RegimeKind::Independent:
    case RegimeKind::Shared:
      break;
    case RegimeKind::Increasing:
      require(in_unit_open_closed(q),
              name + ": q must satisfy 0 < q <= 1 (got " + std::to_string(q) + ")");
      break;
    case RegimeKind::Decreasing:
      require(in_unit_closed(p),
              name + ": p must satisfy 0 <= p <= 1 (got " + std::to_string(p) + ")");
      break;
    case RegimeKind::Converging:
    case RegimeKind::Bounded:
      require(in_unit_closed(p),
              name + ": p must satisfy 0 <= p <= 1 (got " + std::to_string(p) + ")");
      require(in_unit_open_closed(q),
              name + ": q must satisfy 0 < q <= 1 (got " + std::to_string(q) + ")");
      break;
    case RegimeKind::ConstantVariance:
      require(in_unit_closed(p),
              name + ": p must satisfy 0 <= p <= 1 (got " + std::to_string(p) + ")");
      break;
  }
}

std::vector<DynParam> free_parameters(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::Independent:
    case RegimeKind::Shared:
      return {DynParam::Beta0};
    case RegimeKind::Increasing:
      return {DynParam::Beta0, DynParam::Q};
    case RegimeKind::Decreasing:
    case RegimeKind::ConstantVariance:
      return {DynParam::Beta0, DynParam::P};
    case RegimeKind::Converging:
    case RegimeKind::Bounded:
      return {DynParam::Beta0, DynParam::P, DynParam::Q};
  }
  return {};
}

int RegimeSpec::free_parameters() const noexcept {
  return static_cast<int>(countssm::free_parameters(kind).size());
}

QPair q_pair(const RegimeSpec& spec, ScheduleContext ctx) {
  spec.validate();
  if (!(ctx.beta > 0.0)) throw std::domain_error("q_pair: beta_t must be > 0");
  return detail::q_pair_unchecked(spec, ctx);
}

QPair detail::q_pair_unchecked(const RegimeSpec& spec, ScheduleContext ctx) {
  switch (spec.kind) {
    case RegimeKind::Independent:
      throw std::domain_error("q_pair: the independent regime resets to the prior");
    case RegimeKind::Shared:
      return {1.0, 1.0};
    case RegimeKind::Increasing:
      return {spec.q, spec.q};
    case RegimeKind::Decreasing:
      return {spec.p, 1.0};
    case RegimeKind::Converging:
    case RegimeKind::Bounded:
      return {spec.p * spec.q, spec.q};
    case RegimeKind::ConstantVariance: {
      const double p2 = spec.p * spec.p;
      double q2 = spec.beta0 / (p2 * spec.beta0 + (1.0 - p2) * ctx.beta);
      // beta_t >= beta0 keeps q2 <= 1 on every reachable path; clamp the
      // rounding excess when beta_t == beta0 exactly.
      if (q2 > 1.0) q2 = 1.0;
      double qstar = spec.p * q2;
      if (qstar > q2) qstar = q2;
      return {qstar, q2};
    }
  }
  throw std::logic_error("q_pair: unhandled regime");
}

double constant_variance_check(double beta0, double beta_t, double qstar, double q2) {
  const double ratio = qstar / q2;
  return (1.0 / q2) * (1.0 / beta_t) + ratio * ratio * (1.0 / beta0 - 1.0 / beta_t) -
         1.0 / beta0;
}

VarianceTrajectory variance_recursion(const RegimeSpec& spec,
                                      std::span<const double> intensities,
                                      std::size_t horizon) {
  spec.validate();
  if (horizon == 0) return {};
  if (intensities.empty()) throw std::domain_error("variance_recursion: no intensities");
  auto lambda_at = [&](std::size_t t) {
    return intensities[std::min(t, intensities.size() - 1)];
  };

  VarianceTrajectory out;
  out.variance.reserve(horizon);
  out.beta.reserve(horizon);

  double variance = 1.0 / spec.beta0;
  double beta = spec.beta0 + lambda_at(0);
  for (std::size_t t = 0; t < horizon; ++t) {
    out.variance.push_back(variance);
    out.beta.push_back(beta);
    if (t + 1 == horizon) break;
    if (spec.kind == RegimeKind::Independent) {
      variance = 1.0 / spec.beta0;
      beta = spec.beta0 + lambda_at(t + 1);
      continue;
    }
    // Var(Theta_t) = E[Var(Theta_t | Y_1:t)] + Var(E[Theta_t | Y_1:t])
    //             = 1/beta_t + W_t
    const auto [qstar, q2] = detail::q_pair_unchecked(spec, {beta});
    const double ratio = qstar / q2;
    const double between = variance - 1.0 / beta;
    variance = 1.0 / (q2 * beta) + ratio * ratio * between;
    beta = q2 * beta + lambda_at(t + 1);
  }
  return out;
}

}  // namespace countssm
