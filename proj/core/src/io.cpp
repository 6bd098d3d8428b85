#include "countssm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "countssm/errors.hpp"
#include "countssm/filter.hpp"
#include "countssm/simulate.hpp"

namespace countssm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(trim(cell));
  return out;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos
                                                ? std::string_view::npos
                                                : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> to_int(std::string_view s) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config: " + key + " must be true or false, got '" + v + "'");
}

double require_double(const std::string& v, const std::string& what) {
  const auto d = to_double(v);
  if (!d || !std::isfinite(*d)) throw InputError(what + ": not a number: '" + v + "'");
  return *d;
}

std::string_view param_name(DynParam p) {
  switch (p) {
    case DynParam::Beta0:
      return "beta0";
    case DynParam::P:
      return "p";
    case DynParam::Q:
      return "q";
  }
  return "?";
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

// ------------------------------------------------------------------ panel CSV

PanelSchema lgpif_schema() {
  PanelSchema schema;
  schema.categorical.push_back(
      {"type", {"City", "County", "Miscellaneous", "School", "Town", "Village"}, "Miscellaneous"});
  return schema;
}

Panel parse_panel(std::istream& in, const PanelSchema& schema, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header = split_csv_line(t);
    break;
  }
  if (header.empty()) throw InputError(source + ": missing header");

  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto id_col = column("id");
  const auto period_col = column("period");
  const auto count_col = column("count");
  const auto exposure_col = column("exposure");
  if (!id_col || !period_col || !count_col) {
    throw InputError(source + ": header must contain id, period and count columns");
  }

  // Covariate columns in file order; categorical ones expand to dummies.
  struct CovariateSource {
    std::size_t index;
    const CategoricalColumn* categorical;
  };
  std::vector<CovariateSource> covariate_sources;
  Panel panel;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == *id_col || c == *period_col || c == *count_col ||
        (exposure_col && c == *exposure_col)) {
      continue;
    }
    const CategoricalColumn* cat = nullptr;
    for (const auto& decl : schema.categorical) {
      if (decl.name == header[c]) cat = &decl;
    }
    if (cat) {
      if (std::find(cat->levels.begin(), cat->levels.end(), cat->reference) ==
          cat->levels.end()) {
        throw InputError(source + ": reference level '" + cat->reference +
                         "' is not among the levels of '" + cat->name + "'");
      }
      for (const auto& level : cat->levels) {
        if (level != cat->reference) panel.covariate_names.push_back(cat->name + "_" + level);
      }
    } else {
      panel.covariate_names.push_back(header[c]);
    }
    covariate_sources.push_back({c, cat});
  }

  std::unordered_map<std::string, std::size_t> index_of;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split_csv_line(t);
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (cells.size() != header.size()) {
      throw InputError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(cells.size()));
    }
    PanelRecord record;
    const auto period = to_int<std::int64_t>(cells[*period_col]);
    if (!period) throw InputError(where + "period must be an integer");
    record.period = *period;
    if (!cells[*count_col].empty()) {
      const auto count = to_int<std::int64_t>(cells[*count_col]);
      if (!count || *count < 0) throw InputError(where + "count must be a nonnegative integer");
      record.count = *count;
    }
    if (exposure_col && !cells[*exposure_col].empty()) {
      record.exposure = require_double(cells[*exposure_col], where + "exposure");
    }
    if (!(record.exposure > 0.0) || record.exposure > schema.max_exposure) {
      throw InputError(where + "exposure must lie in (0, " + format_double(schema.max_exposure) +
                       "]");
    }
    for (const auto& src : covariate_sources) {
      const std::string& cell = cells[src.index];
      if (src.categorical) {
        const auto& levels = src.categorical->levels;
        if (std::find(levels.begin(), levels.end(), cell) == levels.end()) {
          std::string valid;
          for (const auto& l : levels) valid += (valid.empty() ? "" : ", ") + l;
          throw InputError(where + "unknown level '" + cell + "' for '" + header[src.index] +
                           "'; valid levels: " + valid);
        }
        for (const auto& level : levels) {
          if (level != src.categorical->reference) {
            record.covariates.push_back(level == cell ? 1.0 : 0.0);
          }
        }
      } else {
        const auto v = to_double(cell);
        if (!v) {
          throw InputError(where + "column '" + header[src.index] + "' value '" + cell +
                           "' is not numeric; declare the column as categorical");
        }
        record.covariates.push_back(*v);
      }
    }

    const std::string& id = cells[*id_col];
    if (id.empty()) throw InputError(where + "empty id");
    auto [it, inserted] = index_of.try_emplace(id, panel.series.size());
    if (inserted) panel.series.push_back({id, {}});
    auto& records = panel.series[it->second].records;
    for (const auto& r : records) {
      if (r.period == record.period) {
        throw InputError(where + "duplicate record for id '" + id + "' period " +
                         std::to_string(record.period));
      }
    }
    records.push_back(std::move(record));
  }

  for (auto& s : panel.series) {
    std::sort(s.records.begin(), s.records.end(),
              [](const PanelRecord& a, const PanelRecord& b) { return a.period < b.period; });
  }
  try {
    panel.validate();
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
  return panel;
}

Panel load_panel(const std::filesystem::path& path, const PanelSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open panel file " + path.string());
  return parse_panel(in, schema, path.string());
}

void write_panel(std::ostream& out, const Panel& panel) {
  out << "id,period,count,exposure";
  for (const auto& name : panel.covariate_names) out << ',' << name;
  out << '\n';
  for (const auto& s : panel.series) {
    for (const auto& r : s.records) {
      out << s.id << ',' << r.period << ',';
      if (r.count) out << *r.count;
      out << ',' << format_double(r.exposure);
      for (double x : r.covariates) out << ',' << format_double(x);
      out << '\n';
    }
  }
}

void save_panel(const std::filesystem::path& path, const Panel& panel) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_panel(out, panel);
}

// ---------------------------------------------------------------------- split

SplitResult split_panel(const Panel& panel, const HoldoutRule& rule) {
  SplitResult result;
  result.train.covariate_names = panel.covariate_names;
  for (const auto& s : panel.series) {
    PanelSeries train{s.id, {}};
    std::optional<PanelRecord> held;
    if (!rule.period) {
      train.records.assign(s.records.begin(), s.records.end() - 1);
      held = s.records.back();
    } else {
      for (const auto& r : s.records) {
        if (r.period < *rule.period) train.records.push_back(r);
        if (r.period == *rule.period) held = r;
      }
    }
    if (train.records.empty()) {
      result.warnings.push_back("series '" + s.id + "' has no training records; excluded");
      continue;
    }
    const std::size_t index = result.train.series.size();
    result.train.series.push_back(std::move(train));
    if (held && held->count) result.holdout.push_back({index, *held});
  }
  return result;
}

namespace {

FilterState filter_to_next(const PanelSeries& series, std::span<const double> lambdas,
                           const RegimeSpec& regime, std::optional<double> context_beta_last,
                           const FilterOptions& filter_options) {
  const auto obs = observations(series, lambdas);
  const FilterTrace trace = run_filter(obs, regime, filter_options);
  return advance(trace.terminal, regime, context_beta_last);
}

}  // namespace

std::vector<ForecastPair> holdout_forecasts(const SplitResult& split,
                                            const Eigen::VectorXd& eta,
                                            const RegimeSpec& regime,
                                            const LikelihoodOptions& options) {
  regime.validate();
  const Intensities lambdas = compute_intensities(split.train, eta);
  std::vector<double> pooled;
  FilterOptions filter_options;
  if (options.pooled_beta && regime.kind == RegimeKind::ConstantVariance) {
    pooled = pooled_context_beta(lambdas, regime);
    filter_options.context_beta = pooled;
  }
  std::vector<ForecastPair> pairs;
  pairs.reserve(split.holdout.size());
  for (const auto& item : split.holdout) {
    const PanelSeries& s = split.train.series[item.series];
    std::optional<double> ctx;
    if (!pooled.empty()) ctx = pooled[s.records.size() - 1];
    const FilterState next = filter_to_next(s, lambdas[item.series], regime, ctx, filter_options);
    const double lambda =
        intensity(eta, DesignRow{design_vector(item.record), item.record.exposure, 0});
    pairs.push_back({*item.record.count, predictive_mean(next, lambda)});
  }
  return pairs;
}

std::vector<SeriesForecast> forecast_next(const Panel& panel, const Eigen::VectorXd& eta,
                                          const RegimeSpec& regime,
                                          const LikelihoodOptions& options) {
  regime.validate();
  const Intensities lambdas = compute_intensities(panel, eta);
  std::vector<double> pooled;
  FilterOptions filter_options;
  if (options.pooled_beta && regime.kind == RegimeKind::ConstantVariance) {
    pooled = pooled_context_beta(lambdas, regime);
    filter_options.context_beta = pooled;
  }
  std::vector<SeriesForecast> out;
  out.reserve(panel.series.size());
  for (std::size_t i = 0; i < panel.series.size(); ++i) {
    const PanelSeries& s = panel.series[i];
    std::optional<double> ctx;
    if (!pooled.empty()) ctx = pooled[s.records.size() - 1];
    const FilterState next = filter_to_next(s, lambdas[i], regime, ctx, filter_options);
    out.push_back({s.id, s.records.back().period + 1, predictive_mean(next, lambdas[i].back())});
  }
  return out;
}

// --------------------------------------------------------------------- config

void RunConfig::validate() const {
  regime.validate();
  if (!(tol > 0.0)) throw InputError("config: tol must be > 0");
  if (max_iter < 1) throw InputError("config: max_iter must be >= 1");
  if (horizon < 1) throw InputError("config: T must be >= 1");
  if (paths < 1) throw InputError("config: paths must be >= 1");
  if (intensities.empty()) throw InputError("config: lambda must list at least one value");
  for (double l : intensities) {
    if (!(l > 0.0)) throw InputError("config: every lambda must be > 0");
  }
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::map<std::string, std::vector<std::string>> levels;
  std::map<std::string, std::string> references;
  std::string line;
  std::size_t line_no = 0;
  std::optional<RegimeKind> single;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string t = trim(std::string_view(line).substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw InputError(where + "expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    cfg.entries.emplace_back(key, value);

    auto kind_of = [&](const std::string& name) {
      const auto k = parse_regime_kind(name);
      if (!k) throw InputError(where + "unknown regime '" + name + "'");
      return *k;
    };

    if (key == "regime") {
      single = kind_of(value);
    } else if (key == "regimes") {
      cfg.regimes.clear();
      for (const auto& name : split_list(value)) cfg.regimes.push_back(kind_of(name));
    } else if (key == "beta0") {
      cfg.regime.beta0 = require_double(value, where + key);
    } else if (key == "p") {
      cfg.regime.p = require_double(value, where + key);
    } else if (key == "q") {
      cfg.regime.q = require_double(value, where + key);
    } else if (key == "tol") {
      cfg.tol = require_double(value, where + key);
    } else if (key == "max_iter") {
      const auto v = to_int<int>(value);
      if (!v) throw InputError(where + "max_iter must be an integer");
      cfg.max_iter = *v;
    } else if (key == "seed") {
      const auto v = to_int<std::uint64_t>(value);
      if (!v) throw InputError(where + "seed must be a nonnegative integer");
      cfg.seed = *v;
    } else if (key == "holdout") {
      if (value == "last") {
        cfg.holdout = HoldoutRule::last();
      } else {
        const auto v = to_int<std::int64_t>(value);
        if (!v) throw InputError(where + "holdout must be 'last' or a period label");
        cfg.holdout = HoldoutRule::at(*v);
      }
    } else if (key == "bic_n") {
      if (value == "observations") {
        cfg.bic = BicConvention::Observations;
      } else if (value == "series") {
        cfg.bic = BicConvention::Series;
      } else {
        throw InputError(where + "bic_n must be 'observations' or 'series'");
      }
    } else if (key == "pooled_beta") {
      cfg.pooled_beta = parse_bool(value, where + key);
    } else if (key == "threads") {
      const auto v = to_int<unsigned>(value);
      if (!v) throw InputError(where + "threads must be a nonnegative integer");
      cfg.threads = *v;
    } else if (key == "T") {
      const auto v = to_int<std::size_t>(value);
      if (!v) throw InputError(where + "T must be a positive integer");
      cfg.horizon = *v;
    } else if (key == "paths") {
      const auto v = to_int<std::size_t>(value);
      if (!v) throw InputError(where + "paths must be a positive integer");
      cfg.paths = *v;
    } else if (key == "lambda") {
      cfg.intensities.clear();
      for (const auto& v : split_list(value)) {
        cfg.intensities.push_back(require_double(v, where + key));
      }
    } else if (key == "max_exposure") {
      cfg.schema.max_exposure = require_double(value, where + key);
    } else if (key.rfind("categorical.", 0) == 0) {
      levels[key.substr(12)] = split_list(value);
    } else if (key.rfind("reference.", 0) == 0) {
      references[key.substr(10)] = value;
    } else {
      throw InputError(where + "unknown key '" + key + "'");
    }
  }
  if (single) cfg.regime.kind = *single;
  if (cfg.regimes.empty() && single) cfg.regimes.push_back(*single);
  for (auto& [name, lv] : levels) {
    const auto ref = references.find(name);
    if (ref == references.end()) {
      throw InputError(source + ": categorical." + name + " needs a reference." + name);
    }
    cfg.schema.categorical.push_back({name, lv, ref->second});
  }
  for (const auto& [name, ref] : references) {
    if (!levels.count(name)) {
      throw InputError(source + ": reference." + name + " without categorical." + name);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

// ---------------------------------------------------------------- model files

void write_model(std::ostream& out, const ModelFile& m) {
  out << "# count-ssm model\n";
  out << "schema_version=" << kSchemaVersion << '\n';
  out << "regime=" << to_string(m.regime.kind) << '\n';
  out << "beta0=" << format_double(m.regime.beta0) << '\n';
  out << "p=" << format_double(m.regime.p) << '\n';
  out << "q=" << format_double(m.regime.q) << '\n';
  out << "covariates=";
  for (std::size_t j = 0; j < m.covariate_names.size(); ++j) {
    out << (j ? "," : "") << m.covariate_names[j];
  }
  out << "\neta=";
  for (Eigen::Index j = 0; j < m.eta.size(); ++j) {
    out << (j ? "," : "") << format_double(m.eta(j));
  }
  out << "\ndispersion=" << format_double(m.dispersion) << '\n';
  out << "loglik=" << format_double(m.loglik) << '\n';
  out << "aic=" << format_double(m.aic) << '\n';
  out << "bic=" << format_double(m.bic) << '\n';
  out << "k=" << m.k << '\n';
  out << "n_obs=" << m.n_obs << '\n';
  out << "seed=" << m.seed << '\n';
  out << "boundary=";
  for (std::size_t j = 0; j < m.boundary.size(); ++j) {
    out << (j ? "," : "") << param_name(m.boundary[j]);
  }
  out << '\n';
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  write_model(out, model);
}

ModelFile read_model(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError(source + ": malformed line '" + t + "'");
    kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw InputError(source + ": missing key '" + key + "'");
    return it->second;
  };
  if (get("schema_version") != std::to_string(kSchemaVersion)) {
    throw InputError(source + ": unsupported schema_version " + get("schema_version"));
  }
  ModelFile m;
  const auto kind = parse_regime_kind(get("regime"));
  if (!kind) throw InputError(source + ": unknown regime '" + get("regime") + "'");
  m.regime.kind = *kind;
  m.regime.beta0 = require_double(get("beta0"), source + ": beta0");
  m.regime.p = require_double(get("p"), source + ": p");
  m.regime.q = require_double(get("q"), source + ": q");
  m.covariate_names = split_list(get("covariates"));
  const auto eta = split_list(get("eta"));
  m.eta.resize(static_cast<Eigen::Index>(eta.size()));
  for (std::size_t j = 0; j < eta.size(); ++j) {
    m.eta(static_cast<Eigen::Index>(j)) = require_double(eta[j], source + ": eta");
  }
  if (m.eta.size() != static_cast<Eigen::Index>(m.covariate_names.size() + 1)) {
    throw InputError(source + ": eta must have one entry per covariate plus the intercept");
  }
  m.dispersion = require_double(get("dispersion"), source + ": dispersion");
  m.loglik = require_double(get("loglik"), source + ": loglik");
  m.aic = require_double(get("aic"), source + ": aic");
  m.bic = require_double(get("bic"), source + ": bic");
  m.k = static_cast<int>(require_double(get("k"), source + ": k"));
  m.n_obs = static_cast<std::size_t>(require_double(get("n_obs"), source + ": n_obs"));
  const auto seed = to_int<std::uint64_t>(get("seed"));
  if (!seed) throw InputError(source + ": seed must be an integer");
  m.seed = *seed;
  for (const auto& name : split_list(kv.count("boundary") ? kv["boundary"] : "")) {
    if (name == "beta0") {
      m.boundary.push_back(DynParam::Beta0);
    } else if (name == "p") {
      m.boundary.push_back(DynParam::P);
    } else if (name == "q") {
      m.boundary.push_back(DynParam::Q);
    } else {
      throw InputError(source + ": unknown boundary parameter '" + name + "'");
    }
  }
  try {
    m.regime.validate();
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
  return m;
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path.string());
  return read_model(in, path.string());
}

namespace {

std::string display_name(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::Independent:
      return "Independent";
    case RegimeKind::Shared:
      return "Shared";
    case RegimeKind::Increasing:
      return "Increasing";
    case RegimeKind::Decreasing:
      return "Decreasing";
    case RegimeKind::Converging:
      return "Converging";
    case RegimeKind::Bounded:
      return "Bounded";
    case RegimeKind::ConstantVariance:
      return "Constant";
  }
  return "?";
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace

void write_comparison_csv(std::ostream& out, const std::vector<DynamicsFit>& fits,
                          const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << '\n';
  out << "quantity";
  for (const auto& f : fits) out << ',' << display_name(f.regime.kind);
  out << '\n';
  auto row = [&](const char* name, auto&& cell) {
    out << name;
    for (const auto& f : fits) out << ',' << cell(f);
    out << '\n';
  };
  row("beta0", [](const DynamicsFit& f) { return fixed(f.regime.beta0, 6); });
  row("p", [](const DynamicsFit& f) { return fixed(f.regime.p, 6); });
  row("q", [](const DynamicsFit& f) {
    return f.regime.kind == RegimeKind::ConstantVariance ? std::string("-")
                                                         : fixed(f.regime.q, 6);
  });
  row("loglik", [](const DynamicsFit& f) { return fixed(f.loglik, 6); });
  row("aic", [](const DynamicsFit& f) { return fixed(f.aic, 6); });
  row("bic", [](const DynamicsFit& f) { return fixed(f.bic, 6); });
  row("k", [](const DynamicsFit& f) { return std::to_string(f.k); });
  row("n_bic", [](const DynamicsFit& f) { return std::to_string(f.n_bic); });
  std::vector<std::size_t> order(fits.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fits[a].aic < fits[b].aic; });
  std::vector<std::size_t> rank(fits.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  out << "aic_rank";
  for (std::size_t r : rank) out << ',' << r;
  out << '\n';
  row("boundary", [](const DynamicsFit& f) {
    std::string s;
    for (DynParam p : f.boundary) s += (s.empty() ? "" : ";") + std::string(param_name(p));
    return s.empty() ? std::string("none") : s;
  });
}

void write_validation_csv(std::ostream& out, const std::vector<ValidationColumn>& columns,
                          const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << '\n';
  out << "metric";
  for (const auto& c : columns) out << ',' << c.model;
  out << "\nRMSE";
  for (const auto& c : columns) out << ',' << fixed(c.rmse, 6);
  out << "\nMAE";
  for (const auto& c : columns) out << ',' << fixed(c.mae, 6);
  out << "\nPDL";
  for (const auto& c : columns) out << ',' << fixed(c.pdl, 6);
  out << '\n';
}

// ------------------------------------------------------------------ synthetic

SynthResult synth_panel(const SynthSpec& spec, std::uint64_t seed) {
  spec.regime.validate();
  if (spec.n_series == 0 || spec.horizon == 0) {
    throw InputError("synth_panel: n_series and horizon must be >= 1");
  }
  if (spec.eta.size() < 1) throw InputError("synth_panel: eta needs an intercept");
  if (!(spec.missing_fraction >= 0.0 && spec.missing_fraction < 1.0)) {
    throw InputError("synth_panel: missing_fraction must lie in [0, 1)");
  }
  const auto n_cov = static_cast<std::size_t>(spec.eta.size() - 1);

  SynthResult result;
  for (std::size_t j = 0; j < n_cov; ++j) {
    result.panel.covariate_names.push_back("x" + std::to_string(j + 1));
  }
  for (std::size_t i = 0; i < spec.n_series; ++i) {
    const Rng base(seed, i);
    Rng design_rng = base.split(0);
    Rng path_rng = base.split(1);

    PanelSeries series{"s" + std::to_string(i + 1), {}};
    std::vector<double> lambdas;
    std::unique_ptr<bool[]> mask(new bool[spec.horizon]);
    std::vector<double> fixed_cov(n_cov);
    for (auto& x : fixed_cov) x = design_rng.normal();
    for (std::size_t t = 0; t < spec.horizon; ++t) {
      PanelRecord r;
      r.period = spec.first_period + static_cast<std::int64_t>(t);
      r.covariates = fixed_cov;
      if (spec.time_varying_covariates) {
        for (auto& x : r.covariates) x = design_rng.normal();
      }
      mask[t] = !(spec.missing_fraction > 0.0 && design_rng.uniform() < spec.missing_fraction);
      lambdas.push_back(intensity(spec.eta, DesignRow{design_vector(r), r.exposure, 0}));
      series.records.push_back(std::move(r));
    }
    const SimPath path = simulate_path(
        {spec.regime, spec.horizon, lambdas, std::span<const bool>(mask.get(), spec.horizon)},
        path_rng);
    for (std::size_t t = 0; t < spec.horizon; ++t) series.records[t].count = path.counts[t];
    result.panel.series.push_back(std::move(series));
    result.intensities.push_back(std::move(lambdas));
    result.theta.push_back(path.theta);
  }
  return result;
}

SynthResult resimulate_panel(const Panel& panel, const Eigen::VectorXd& eta,
                             const RegimeSpec& regime, std::uint64_t seed) {
  regime.validate();
  SynthResult result;
  result.panel = panel;
  result.intensities = compute_intensities(panel, eta);
  for (std::size_t i = 0; i < panel.series.size(); ++i) {
    auto& records = result.panel.series[i].records;
    std::unique_ptr<bool[]> mask(new bool[records.size()]);
    for (std::size_t t = 0; t < records.size(); ++t) mask[t] = records[t].count.has_value();
    Rng rng = Rng(seed, i).split(1);
    const SimPath path = simulate_path(
        {regime, records.size(), result.intensities[i],
         std::span<const bool>(mask.get(), records.size())},
        rng);
    for (std::size_t t = 0; t < records.size(); ++t) records[t].count = path.counts[t];
    result.theta.push_back(path.theta);
  }
  return result;
}

}  // namespace countssm
