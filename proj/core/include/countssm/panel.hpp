#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "countssm/filter.hpp"
#include "countssm/regression.hpp"

namespace countssm {

struct PanelRecord {
  std::int64_t period = 0;
  std::optional<std::int64_t> count;  ///< empty when unobserved
  double exposure = 1.0;
  std::vector<double> covariates;     ///< numeric, already dummy coded

  friend bool operator==(const PanelRecord&, const PanelRecord&) = default;
};

/// One policyholder's records in period order.
struct PanelSeries {
  std::string id;
  std::vector<PanelRecord> records;

  friend bool operator==(const PanelSeries&, const PanelSeries&) = default;
};

/// A collection of series sharing one covariate layout. Periods within a
/// series are contiguous integers so that record k is time index k+1.
struct Panel {
  std::vector<std::string> covariate_names;
  std::vector<PanelSeries> series;

  std::size_t n_records() const noexcept;
  std::size_t n_observed() const noexcept;

  /// Throws InputError on empty series, duplicate ids, non-contiguous
  /// periods, ragged covariates, negative counts or non-positive exposure.
  void validate() const;

  friend bool operator==(const Panel&, const Panel&) = default;
};

/// lambda_{i,t} for every record, aligned with panel.series[i].records[t].
using Intensities = std::vector<std::vector<double>>;

/// Regression coefficients include a leading intercept; covariates follow in
/// `covariate_names` order.
Eigen::VectorXd design_vector(const PanelRecord& record);

/// Observed records as GLM rows (intercept prepended).
std::vector<DesignRow> design_rows(const Panel& panel);

Intensities compute_intensities(const Panel& panel, const Eigen::VectorXd& eta);

std::vector<Observation> observations(const PanelSeries& series,
                                      std::span<const double> intensities);

}  // namespace countssm
