#include "countssm/filter.hpp"

#include <cmath>
#include <stdexcept>

namespace countssm {

FilterState init_state(double beta0) {
  if (!(beta0 > 0.0) || !std::isfinite(beta0)) {
    throw std::domain_error("init_state: beta0 must be > 0");
  }
  return {1, GammaLaw(beta0, beta0), std::nullopt};
}

FilterState update(const FilterState& state, const Observation& obs) {
  if (!(obs.intensity > 0.0)) throw std::domain_error("update: intensity must be > 0");
  FilterState out = state;
  if (!obs.count) {
    out.post = state.pred;
    return out;
  }
  if (*obs.count < 0) throw std::domain_error("update: negative count");
  out.post = GammaLaw(state.pred.shape() + static_cast<double>(*obs.count),
                      state.pred.rate() + obs.intensity);
  return out;
}

FilterState predict(const FilterState& state, double qstar, double q2) {
  if (!(q2 > 0.0 && q2 <= 1.0 && qstar >= 0.0 && qstar <= q2)) {
    throw std::domain_error("predict: requires 0 <= q* <= q** <= 1 and q** > 0");
  }
  if (!state.post) throw std::logic_error("predict: state has no filtering law");
  const double alpha = state.post->shape();
  const double beta = state.post->rate();
  return {state.t + 1, GammaLaw(qstar * alpha + (q2 - qstar) * beta, q2 * beta),
          std::nullopt};
}

FilterState advance(const FilterState& state, const RegimeSpec& regime,
                    std::optional<double> context_beta) {
  if (regime.kind == RegimeKind::Independent) {
    return {state.t + 1, GammaLaw(regime.beta0, regime.beta0), std::nullopt};
  }
  if (!state.post) throw std::logic_error("advance: state has no filtering law");
  const double beta = context_beta.value_or(state.post->rate());
  const auto [qstar, q2] = detail::q_pair_unchecked(regime, {beta});
  return predict(state, qstar, q2);
}

NBLaw predictive_law(const FilterState& state, double intensity) {
  return NBLaw(intensity * state.pred.shape() / state.pred.rate(), state.pred.shape());
}

double predictive_mean(const FilterState& state, double intensity) {
  return intensity * state.pred.shape() / state.pred.rate();
}

namespace {

template <typename OnStep>
FilterState filter_loop(std::span<const Observation> series, const RegimeSpec& regime,
                        const FilterOptions& options, OnStep&& on_step) {
  if (series.empty()) throw std::domain_error("run_filter: empty series");
  regime.validate();
  if (!options.context_beta.empty() && options.context_beta.size() + 1 < series.size()) {
    throw std::domain_error("run_filter: context_beta shorter than the series");
  }
  FilterState state = init_state(regime.beta0);
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (i > 0) {
      std::optional<double> ctx;
      if (!options.context_beta.empty()) ctx = options.context_beta[i - 1];
      state = advance(state, regime, ctx);
    }
    const Observation& obs = series[i];
    const NBLaw law = predictive_law(state, obs.intensity);
    state = update(state, obs);
    std::optional<double> contribution;
    if (obs.count) contribution = nb_log_pmf(*obs.count, law);
    on_step(state, law, contribution);
  }
  return state;
}

}  // namespace

FilterTrace run_filter(std::span<const Observation> series, const RegimeSpec& regime,
                       const FilterOptions& options) {
  FilterTrace trace;
  trace.steps.reserve(series.size());
  trace.terminal = filter_loop(
      series, regime, options,
      [&](const FilterState& s, const NBLaw& law, std::optional<double> contribution) {
        trace.steps.push_back({s.pred, *s.post, law, contribution});
        if (contribution) trace.loglik += *contribution;
      });
  return trace;
}

double series_loglik(std::span<const Observation> series, const RegimeSpec& regime,
                     const FilterOptions& options) {
  double total = 0.0;
  filter_loop(series, regime, options,
              [&](const FilterState&, const NBLaw&, std::optional<double> contribution) {
                if (contribution) total += *contribution;
              });
  return total;
}

}  // namespace countssm
