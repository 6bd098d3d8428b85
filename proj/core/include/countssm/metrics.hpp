#pragma once

#include <cstdint>
#include <span>

namespace countssm {

struct ForecastPair {
  std::int64_t actual;
  double predicted;  ///< must be > 0 for the deviance loss
};

/// Root mean-squared error. Throws std::domain_error on an empty set.
double rmse(std::span<const ForecastPair> pairs);

/// Mean absolute error. Throws std::domain_error on an empty set.
double mae(std::span<const ForecastPair> pairs);

/// Mean Poisson deviance 2 (yhat - y - y log(yhat / y)); a zero count
/// contributes 2 yhat. Throws std::domain_error on an empty set or a
/// non-positive prediction.
double pdl(std::span<const ForecastPair> pairs);

}  // namespace countssm
