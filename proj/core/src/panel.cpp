#include "countssm/panel.hpp"

#include <cmath>
#include <unordered_set>

#include "countssm/errors.hpp"

namespace countssm {

std::size_t Panel::n_records() const noexcept {
  std::size_t n = 0;
  for (const auto& s : series) n += s.records.size();
  return n;
}

std::size_t Panel::n_observed() const noexcept {
  std::size_t n = 0;
  for (const auto& s : series) {
    for (const auto& r : s.records) n += r.count.has_value() ? 1 : 0;
  }
  return n;
}

void Panel::validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& s : series) {
    if (!ids.insert(s.id).second) throw InputError("panel: duplicate series id '" + s.id + "'");
    if (s.records.empty()) throw InputError("panel: series '" + s.id + "' has no records");
    for (std::size_t k = 0; k < s.records.size(); ++k) {
      const PanelRecord& r = s.records[k];
      const std::string where =
          "panel: series '" + s.id + "' period " + std::to_string(r.period) + ": ";
      if (k > 0 && r.period != s.records[k - 1].period + 1) {
        throw InputError(where + "periods must be contiguous (previous period " +
                         std::to_string(s.records[k - 1].period) +
                         "); add a row with an empty count for unobserved periods");
      }
      if (r.count && *r.count < 0) throw InputError(where + "negative count");
      if (!(r.exposure > 0.0) || !std::isfinite(r.exposure)) {
        throw InputError(where + "exposure must be > 0");
      }
      if (r.covariates.size() != covariate_names.size()) {
        throw InputError(where + "expected " + std::to_string(covariate_names.size()) +
                         " covariates, found " + std::to_string(r.covariates.size()));
      }
      for (double x : r.covariates) {
        if (!std::isfinite(x)) throw InputError(where + "non-finite covariate");
      }
    }
  }
}

Eigen::VectorXd design_vector(const PanelRecord& record) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(record.covariates.size() + 1));
  x(0) = 1.0;
  for (std::size_t j = 0; j < record.covariates.size(); ++j) {
    x(static_cast<Eigen::Index>(j + 1)) = record.covariates[j];
  }
  return x;
}

std::vector<DesignRow> design_rows(const Panel& panel) {
  std::vector<DesignRow> rows;
  rows.reserve(panel.n_observed());
  for (const auto& s : panel.series) {
    for (const auto& r : s.records) {
      if (r.count) rows.push_back({design_vector(r), r.exposure, *r.count});
    }
  }
  return rows;
}

Intensities compute_intensities(const Panel& panel, const Eigen::VectorXd& eta) {
  Intensities out;
  out.reserve(panel.series.size());
  for (const auto& s : panel.series) {
    std::vector<double> lambdas;
    lambdas.reserve(s.records.size());
    for (const auto& r : s.records) {
      lambdas.push_back(intensity(eta, DesignRow{design_vector(r), r.exposure, 0}));
    }
    out.push_back(std::move(lambdas));
  }
  return out;
}

std::vector<Observation> observations(const PanelSeries& series,
                                      std::span<const double> intensities) {
  if (intensities.size() != series.records.size()) {
    throw InputError("series '" + series.id + "': intensity count does not match records");
  }
  std::vector<Observation> out;
  out.reserve(series.records.size());
  for (std::size_t k = 0; k < series.records.size(); ++k) {
    out.push_back({series.records[k].count, intensities[k]});
  }
  return out;
}

}  // namespace countssm
