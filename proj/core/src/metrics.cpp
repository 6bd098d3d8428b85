#include "countssm/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace countssm {

namespace {

void require_nonempty(std::span<const ForecastPair> pairs, const char* name) {
  if (pairs.empty()) throw std::domain_error(std::string(name) + ": no forecast pairs");
}

}  // namespace

double rmse(std::span<const ForecastPair> pairs) {
  require_nonempty(pairs, "rmse");
  double sum = 0.0;
  for (const auto& [y, yhat] : pairs) {
    const double e = static_cast<double>(y) - yhat;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

double mae(std::span<const ForecastPair> pairs) {
  require_nonempty(pairs, "mae");
  double sum = 0.0;
  for (const auto& [y, yhat] : pairs) sum += std::fabs(static_cast<double>(y) - yhat);
  return sum / static_cast<double>(pairs.size());
}

double pdl(std::span<const ForecastPair> pairs) {
  require_nonempty(pairs, "pdl");
  double sum = 0.0;
  for (const auto& [y, yhat] : pairs) {
    if (!(yhat > 0.0)) throw std::domain_error("pdl: predictions must be > 0");
    const double yd = static_cast<double>(y);
    double term = yhat - yd;
    if (y > 0) term -= yd * std::log(yhat / yd);
    sum += 2.0 * term;
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace countssm
