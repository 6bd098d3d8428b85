#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "countssm/estimate.hpp"
#include "countssm/metrics.hpp"
#include "countssm/panel.hpp"
#include "countssm/regimes.hpp"

namespace countssm {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Panel CSV
//
//   id,period,count,exposure,<covariate columns...>
//
// `period` is an integer label, an empty `count` marks an unobserved period,
// and an empty or absent `exposure` means 1. Lines starting with '#' are
// comments. Categorical covariates are dummy coded against a declared
// reference level into columns named <column>_<level>.
// ---------------------------------------------------------------------------

struct CategoricalColumn {
  std::string name;
  std::vector<std::string> levels;  ///< declared order; fixes dummy order
  std::string reference;
};

struct PanelSchema {
  std::vector<CategoricalColumn> categorical;
  /// Exposures above this are rejected (fraction-of-year semantics).
  double max_exposure = 1.0;
};

/// Inland-marine LGPIF layout: entity type in column `type` with reference
/// level "Miscellaneous"; coverage and deductible already logged.
PanelSchema lgpif_schema();

Panel parse_panel(std::istream& in, const PanelSchema& schema = {},
                  const std::string& source = "<stream>");
Panel load_panel(const std::filesystem::path& path, const PanelSchema& schema = {});
void write_panel(std::ostream& out, const Panel& panel);
void save_panel(const std::filesystem::path& path, const Panel& panel);

// ---------------------------------------------------------------------------
// Train / holdout split
// ---------------------------------------------------------------------------

struct HoldoutRule {
  /// Empty: each series' last record. Otherwise: records at this period
  /// label, with training on the strictly earlier records.
  std::optional<std::int64_t> period;

  static HoldoutRule last() { return {}; }
  static HoldoutRule at(std::int64_t label) { return {label}; }
};

struct HoldoutItem {
  std::size_t series;  ///< index into SplitResult::train.series
  PanelRecord record;
};

struct SplitResult {
  Panel train;
  std::vector<HoldoutItem> holdout;  ///< at most one per series
  std::vector<std::string> warnings;
};

SplitResult split_panel(const Panel& panel, const HoldoutRule& rule);

/// Predictive means for each observed holdout record, after filtering the
/// series' training window with the fitted regime and regression.
std::vector<ForecastPair> holdout_forecasts(const SplitResult& split,
                                            const Eigen::VectorXd& eta,
                                            const RegimeSpec& regime,
                                            const LikelihoodOptions& options = {});

/// One-step-ahead predictive mean for every series, using the covariates and
/// exposure of its last record for the next period.
struct SeriesForecast {
  std::string id;
  std::int64_t period;
  double mean;
};
std::vector<SeriesForecast> forecast_next(const Panel& panel, const Eigen::VectorXd& eta,
                                          const RegimeSpec& regime,
                                          const LikelihoodOptions& options = {});

// ---------------------------------------------------------------------------
// Flat key=value configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::vector<RegimeKind> regimes;
  RegimeSpec regime;              ///< simulate/study settings
  double tol = 1e-8;
  int max_iter = 100;
  std::optional<std::uint64_t> seed;
  HoldoutRule holdout;
  BicConvention bic = BicConvention::Observations;
  bool pooled_beta = false;
  std::optional<unsigned> threads;
  std::size_t horizon = 50;
  std::size_t paths = 5000;
  std::vector<double> intensities{1.0};
  PanelSchema schema;

  /// Every key seen, in file order, for recording in output headers.
  std::vector<std::pair<std::string, std::string>> entries;

  void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Recognized keys:
/// regime, regimes, beta0, p, q, tol, max_iter, seed, holdout, bic_n,
/// pooled_beta, threads, T, paths, lambda, max_exposure,
/// categorical.<column> (comma-separated levels) and reference.<column>.
RunConfig parse_config(std::istream& in, const std::string& source = "<stream>");
RunConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

struct ModelFile {
  RegimeSpec regime;
  std::vector<std::string> covariate_names;
  Eigen::VectorXd eta;  ///< intercept first
  double dispersion = 0.0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  int k = 0;
  std::size_t n_obs = 0;
  std::uint64_t seed = 0;
  std::vector<DynParam> boundary;
};

void write_model(std::ostream& out, const ModelFile& model);
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model(std::istream& in, const std::string& source = "<stream>");
ModelFile load_model(const std::filesystem::path& path);

/// Table-layout CSVs: one column per model. `header` lines are written as
/// "# line" comments first.
void write_comparison_csv(std::ostream& out, const std::vector<DynamicsFit>& fits,
                          const std::vector<std::string>& header);
struct ValidationColumn {
  std::string model;
  double rmse;
  double mae;
  double pdl;
};
void write_validation_csv(std::ostream& out, const std::vector<ValidationColumn>& columns,
                          const std::vector<std::string>& header);

// ---------------------------------------------------------------------------
// Synthetic panels
// ---------------------------------------------------------------------------

struct SynthSpec {
  std::size_t n_series = 100;
  std::size_t horizon = 6;
  RegimeSpec regime = RegimeSpec::shared(3.0);
  /// Intercept first; covariates are iid standard normal, one per extra entry.
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(1);
  bool time_varying_covariates = true;
  double missing_fraction = 0.0;
  std::int64_t first_period = 1;
};

struct SynthResult {
  Panel panel;
  Intensities intensities;
  std::vector<std::vector<double>> theta;
};

/// Series i draws from Rng(seed, i): covariates and the observation mask on
/// one child stream, the state path on another.
SynthResult synth_panel(const SynthSpec& spec, std::uint64_t seed);

/// Synthetic panel conditional on given covariates: regenerates counts for
/// `panel`'s records under (eta, regime), keeping layout and missingness.
SynthResult resimulate_panel(const Panel& panel, const Eigen::VectorXd& eta,
                             const RegimeSpec& regime, std::uint64_t seed);

}  // namespace countssm
