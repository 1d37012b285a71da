#include "riwtl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "riwtl/rng.hpp"

namespace riwtl {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& cell, Index row, const std::string& column) {
  const std::string t = trim(cell);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw DataError("CSV row " + std::to_string(row) + " column " + column +
                    ": non-numeric cell '" + t + "'");
  if (!std::isfinite(v))
    throw DataError("CSV row " + std::to_string(row) + " column " + column +
                    ": non-finite value '" + t + "'");
  return v;
}

}  // namespace

NamedDataset load_named_dataset_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file: " + path.string());
  auto header = split(trim(line), ',');
  for (auto& h : header) h = trim(h);
  if (header.empty() || header.front() != "y")
    throw DataError(path.string() + ": first column must be named 'y'");
  const std::size_t ncol = header.size();
  if (ncol < 2) throw DataError(path.string() + ": no predictor columns");

  std::vector<std::vector<double>> rows;
  Index row_number = 1;  // header is row 0
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, ',');
    if (cells.size() != ncol)
      throw DataError(path.string() + ": row " + std::to_string(row_number) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(ncol));
    std::vector<double> parsed(ncol);
    for (std::size_t c = 0; c < ncol; ++c)
      parsed[c] = parse_cell(cells[c], row_number, header[c]);
    rows.push_back(std::move(parsed));
    ++row_number;
  }
  if (rows.empty()) throw DataError(path.string() + ": no data rows");

  const Index n = static_cast<Index>(rows.size());
  const Index p = static_cast<Index>(ncol) - 1;
  Matrix x(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = rows[i][0];
    for (Index j = 0; j < p; ++j) x(i, j) = rows[i][j + 1];
  }
  return NamedDataset{Dataset(std::move(x), std::move(y)),
                      {header.begin() + 1, header.end()}};
}

Dataset load_dataset_csv(const fs::path& path) { return load_named_dataset_csv(path).data; }

void write_dataset_csv(const fs::path& path, const Dataset& d,
                       const std::vector<std::string>& columns) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file: " + path.string());
  out << "y";
  for (Index j = 0; j < d.p(); ++j) {
    if (!columns.empty())
      out << "," << columns[j];
    else
      out << ",x" << (j + 1);
  }
  out << "\n";
  for (Index i = 0; i < d.n(); ++i) {
    out << format_number(d.y[i]);
    for (Index j = 0; j < d.p(); ++j) out << "," << format_number(d.x(i, j));
    out << "\n";
  }
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (kv.values.count(key))
      throw ConfigError("config: duplicate key '" + key + "'");
    kv.values[key] = value;
  }
  return kv;
}

KeyValueConfig KeyValueConfig::parse_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigError("config: missing key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string_or(const std::string& key,
                                          const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double KeyValueConfig::get_double_or(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not a number: '" + it->second + "'");
  }
}

int KeyValueConfig::get_int_or(const std::string& key, int fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not an integer: '" + it->second + "'");
  }
}

std::uint64_t KeyValueConfig::get_u64_or(const std::string& key, std::uint64_t fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' is not an integer: '" + it->second + "'");
  }
}

std::vector<double> KeyValueConfig::get_double_list_or(const std::string& key,
                                                       std::vector<double> fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<double> out;
  for (const auto& piece : split(it->second, ',')) {
    const std::string t = trim(piece);
    if (t.empty()) continue;
    try {
      out.push_back(std::stod(t));
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' has a non-numeric entry: '" + t + "'");
    }
  }
  if (out.empty()) throw ConfigError("config: key '" + key + "' is an empty list");
  return out;
}

std::vector<std::string> KeyValueConfig::get_string_list_or(
    const std::string& key, std::vector<std::string> fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  std::vector<std::string> out;
  for (const auto& piece : split(it->second, ',')) {
    const std::string t = trim(piece);
    if (!t.empty()) out.push_back(t);
  }
  if (out.empty()) throw ConfigError("config: key '" + key + "' is an empty list");
  return out;
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

namespace {

CovariateKind covariate_kind_from(const std::string& tag) {
  if (tag == "gaussian_ar") return CovariateKind::gaussian_ar;
  if (tag == "gaussian_mixture") return CovariateKind::gaussian_mixture;
  if (tag == "student_t") return CovariateKind::student_t;
  throw ConfigError("config: unknown covariate kind '" + tag + "'");
}

SimErrorKind error_kind_from(const std::string& tag) {
  if (tag == "gaussian") return SimErrorKind::gaussian;
  if (tag == "student_t5") return SimErrorKind::student_t5;
  throw ConfigError("config: unknown error kind '" + tag + "'");
}

void check_schema(const KeyValueConfig& kv) {
  const int v = kv.get_int_or("schema_version", kSchemaVersion);
  if (v != kSchemaVersion)
    throw ConfigError("config: unsupported schema_version " + std::to_string(v));
}

}  // namespace

SimConfig sim_config_from(const KeyValueConfig& kv) {
  check_schema(kv);
  SimConfig cfg;
  if (kv.get_string_or("scale", "desk") == "paper") cfg = SimConfig::paper_scale();
  cfg.p = kv.get_int_or("p", cfg.p);
  cfg.n0 = kv.get_int_or("n0", cfg.n0);
  cfg.K = kv.get_int_or("K", cfg.K);
  cfg.s0 = kv.get_int_or("s0", cfg.s0);
  cfg.n_k_default = kv.get_int_or("n_k", cfg.n_k_default);
  if (kv.has("n_k_list")) {
    cfg.n_k.clear();
    for (double v : kv.get_double_list_or("n_k_list", {}))
      cfg.n_k.push_back(static_cast<int>(v));
  }
  cfg.target_cov.kind = covariate_kind_from(kv.get_string_or("target_covariates", "gaussian_ar"));
  cfg.source_cov.kind = covariate_kind_from(kv.get_string_or("source_covariates", "gaussian_ar"));
  cfg.target_cov.rho = cfg.source_cov.rho = kv.get_double_or("rho", 0.5);
  cfg.target_cov.t_df = cfg.source_cov.t_df = kv.get_int_or("t_df", 5);
  cfg.target_err = error_kind_from(kv.get_string_or("target_errors", "gaussian"));
  cfg.source_err = error_kind_from(kv.get_string_or("source_errors", "gaussian"));
  const std::string scheme = kv.get_string_or("coef_scheme", "fixed_magnitude");
  if (scheme == "fixed_magnitude")
    cfg.scheme = CoefScheme::fixed_magnitude;
  else if (scheme == "random_magnitude")
    cfg.scheme = CoefScheme::random_magnitude;
  else
    throw ConfigError("config: unknown coef_scheme '" + scheme + "'");
  cfg.replicates = kv.get_int_or("replicates", cfg.replicates);
  cfg.seed = kv.get_u64_or("seed", cfg.seed);
  return cfg;
}

TuneGrid tune_grid_from(const KeyValueConfig& kv) {
  TuneGrid grid;
  grid.M_grid = kv.get_double_list_or("M_grid", grid.M_grid);
  grid.b_grid = kv.get_double_list_or("b_grid", grid.b_grid);
  grid.lambda_points = kv.get_int_or("lambda_points", grid.lambda_points);
  grid.lambda_min_ratio = kv.get_double_or("lambda_min_ratio", grid.lambda_min_ratio);
  grid.folds = kv.get_int_or("folds", grid.folds);
  return grid;
}

std::vector<SweepCell> cells_from(const KeyValueConfig& kv) {
  std::vector<SweepCell> cells;
  for (const auto& tag : kv.get_string_list_or("cells", {"0:8"})) {
    const auto parts = split(tag, ':');
    if (parts.size() != 2)
      throw ConfigError("config: cell '" + tag + "' must look like mB:d");
    try {
      cells.push_back(SweepCell{std::stoi(trim(parts[0])), std::stoi(trim(parts[1]))});
    } catch (const std::exception&) {
      throw ConfigError("config: cell '" + tag + "' must look like mB:d");
    }
  }
  return cells;
}

std::vector<std::string> methods_from(const KeyValueConfig& kv) {
  const auto methods = kv.get_string_list_or(
      "methods", {"lasso", "riw-tl", "riw-tl-u", "riw-tl-p", "trans-lasso"});
  for (const auto& m : methods)
    if (m != "lasso" && m != "riw-tl" && m != "riw-tl-u" && m != "riw-tl-p" &&
        m != "trans-lasso")
      throw ConfigError("config: unknown method '" + m + "'");
  return methods;
}

TunePolicy tune_policy_from(const KeyValueConfig& kv) {
  const std::string tag = kv.get_string_or("tune_policy", "first_replicate");
  if (tag == "fixed") return TunePolicy::fixed;
  if (tag == "first_replicate") return TunePolicy::first_replicate;
  if (tag == "full") return TunePolicy::full;
  throw ConfigError("config: unknown tune_policy '" + tag + "'");
}

Fig1Config fig1_config_from(const KeyValueConfig& kv) {
  check_schema(kv);
  Fig1Config cfg;
  cfg.p = kv.get_int_or("fig1_p", static_cast<int>(cfg.p));
  cfg.s0 = kv.get_int_or("fig1_s0", static_cast<int>(cfg.s0));
  cfg.n1 = kv.get_int_or("fig1_n1", static_cast<int>(cfg.n1));
  cfg.rho = kv.get_double_or("rho", cfg.rho);
  cfg.coef_step = kv.get_double_or("fig1_coef_step", cfg.coef_step);
  if (kv.has("l_grid")) {
    cfg.l_grid.clear();
    for (double v : kv.get_double_list_or("l_grid", {}))
      cfg.l_grid.push_back(static_cast<int>(v));
  }
  cfg.seed = kv.get_u64_or("seed", cfg.seed);
  return cfg;
}

namespace {

struct ErrorRecord {
  int code = 0;
  std::string kind;
  std::string message;
};

void emit_error(const RunConfig& cfg, const ErrorRecord& err) {
  const std::string record =
      "error kind=" + err.kind + " message=\"" + err.message + "\"";
  std::cerr << record << "\n";
  if (!cfg.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (!ec) {
      std::ofstream out(cfg.out_dir / "error.txt");
      if (out) out << record << "\n";
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file: " + path.string());
  out << text;
}

std::string provenance_block(const RunConfig& cfg, const KeyValueConfig& echo,
                             std::uint64_t seed, const std::string& command,
                             const std::vector<std::string>& failures) {
  KeyValueConfig meta;
  meta.values["command"] = command;
  meta.values["tool_version"] = kToolVersion;
  meta.values["schema_version"] = std::to_string(kSchemaVersion);
  meta.values["generator"] = rng::generator_name();
  meta.values["seed"] = std::to_string(seed);
  meta.values["threads"] = std::to_string(cfg.threads);
  for (const auto& [k, v] : echo.values) meta.values["config_" + k] = v;
  meta.values["failures"] = std::to_string(failures.size());
  for (std::size_t i = 0; i < failures.size(); ++i)
    meta.values["failure_" + std::to_string(i)] = failures[i];
  return meta.serialize();
}

std::string sweep_csv(const ExperimentResult& result) {
  std::string csv = "cell_mB,cell_d,shift,method,replicate,sse,sur,rpe\n";
  for (const auto& cell : result.cells) {
    const std::string prefix = std::to_string(cell.cell.m_B) + "," +
                               std::to_string(cell.cell.d) + "," + cell.shift + ",";
    for (const auto& row : cell.rows) {
      csv += prefix + row.method + "," + std::to_string(row.replicate) + ",";
      if (row.failed) {
        csv += ",,\n";
      } else {
        csv += format_number(row.sse) + "," + format_number(row.sur) + ",";
        csv += row.rpe ? format_number(*row.rpe) : "";
        csv += "\n";
      }
    }
    for (const auto& stats : cell.summary) {
      csv += prefix + stats.method + ",mean," + format_number(stats.sse_mean) + "," +
             format_number(stats.sur_mean) + ",";
      csv += stats.rpe_mean ? format_number(*stats.rpe_mean) : "";
      csv += "\n";
      csv += prefix + stats.method + ",std," + format_number(stats.sse_std) + "," +
             format_number(stats.sur_std) + ",\n";
    }
  }
  return csv;
}

void check_same_columns(const NamedDataset& target, const NamedDataset& source,
                        const fs::path& path) {
  if (target.columns != source.columns)
    throw DataError("column mismatch across files: " + path.string() +
                    " does not match the target's predictor columns");
}

void center_dataset(Dataset& d) {
  for (Index j = 0; j < d.p(); ++j) d.x.col(j).array() -= d.x.col(j).mean();
  d.y.array() -= d.y.mean();
}

TransferProblem load_problem(const RunConfig& cfg, std::vector<std::string>* columns) {
  if (!fs::exists(cfg.target_path))
    throw ConfigError("target file does not exist: " + cfg.target_path.string());
  NamedDataset target = load_named_dataset_csv(cfg.target_path);
  if (cfg.center) center_dataset(target.data);
  std::vector<Dataset> sources;
  for (const auto& path : cfg.source_paths) {
    if (!fs::exists(path))
      throw ConfigError("source file does not exist: " + path.string());
    NamedDataset s = load_named_dataset_csv(path);
    check_same_columns(target, s, path);
    if (cfg.center) center_dataset(s.data);
    sources.push_back(std::move(s.data));
  }
  if (columns) *columns = target.columns;
  return TransferProblem(std::move(target.data), std::move(sources));
}

std::string selection_summary_csv(const FitResult& fit) {
  std::string csv =
      "source_index,record,selected,considered,weight_min,weight_max,A,M,T\n";
  int record = 0;
  for (const auto& rec : fit.selections) {
    double w_min = 0.0, w_max = 0.0;
    if (!rec.weights.empty()) {
      w_min = std::numeric_limits<double>::infinity();
      for (const auto& [i, w] : rec.weights) {
        w_min = std::min(w_min, w);
        w_max = std::max(w_max, w);
      }
    }
    csv += std::to_string(rec.source_index) + "," + std::to_string(record++) + "," +
           std::to_string(rec.selected.size()) + "," + std::to_string(rec.etas.size()) + "," +
           format_number(w_min) + "," + format_number(w_max) + "," + format_number(rec.A) +
           "," + format_number(rec.M) + "," + (rec.T ? format_number(*rec.T) : "") + "\n";
  }
  return csv;
}

void run_simulate(const RunConfig& cfg) {
  const KeyValueConfig kv = KeyValueConfig::parse_file(cfg.config_path);
  SimConfig sim = sim_config_from(kv);
  if (cfg.seed) sim.seed = *cfg.seed;
  const TuneGrid grid = tune_grid_from(kv);
  const auto cells = cells_from(kv);
  const auto methods = methods_from(kv);
  const TunePolicy policy = tune_policy_from(kv);
  const int threads = cfg.threads > 0 ? cfg.threads : kv.get_int_or("threads", 0);

  const ExperimentResult result =
      run_sweep(sim, methods, cells, grid, policy, threads, SolverOptions{});

  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir / "results.csv", sweep_csv(result));

  std::vector<std::string> failures;
  for (const auto& cell : result.cells)
    for (const auto& row : cell.rows)
      if (row.failed)
        failures.push_back("cell=" + std::to_string(cell.cell.m_B) + ":" +
                           std::to_string(cell.cell.d) + " method=" + row.method +
                           " replicate=" + std::to_string(row.replicate) + ": " + row.error);
  write_text(cfg.out_dir / "metadata.txt",
             provenance_block(cfg, kv, sim.seed, "simulate", failures));
}

void run_fig1(const RunConfig& cfg) {
  const KeyValueConfig kv = KeyValueConfig::parse_file(cfg.config_path);
  Fig1Config fig = fig1_config_from(kv);
  if (cfg.seed) fig.seed = *cfg.seed;
  const double A = kv.get_double_or("fig1_A", 1.5);
  const double M = kv.get_double_or("fig1_M", 3.0);
  const int replicates = kv.get_int_or("fig1_replicates", 50);
  const auto delta_edges = kv.get_double_list_or("delta_edges", default_fig1_delta_edges());
  const auto xinf_edges = kv.get_double_list_or("xinf_edges", default_fig1_xinf_edges());

  const FrequencyGrid grid =
      inclusion_probability_grid(fig, A, M, delta_edges, xinf_edges, replicates);

  std::string csv = "delta_lo,delta_hi,xinf_lo,xinf_hi,total,included,frequency\n";
  for (Index i = 0; i < grid.included.rows(); ++i)
    for (Index j = 0; j < grid.included.cols(); ++j) {
      csv += format_number(grid.delta_edges[i]) + "," + format_number(grid.delta_edges[i + 1]) +
             "," + format_number(grid.xinf_edges[j]) + "," +
             format_number(grid.xinf_edges[j + 1]) + "," + format_number(grid.total(i, j)) +
             "," + format_number(grid.included(i, j)) + ",";
      const auto freq = grid.frequency(i, j);
      csv += freq ? format_number(*freq) : "";
      csv += "\n";
    }

  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir / "fig1.csv", csv);
  write_text(cfg.out_dir / "metadata.txt", provenance_block(cfg, kv, fig.seed, "fig1", {}));
}

FitResult dispatch_fit(const RunConfig& cfg, const TransferProblem& problem,
                       std::uint64_t seed, const SolverOptions& opts, TuneResult* tuned_out) {
  const std::string& m = cfg.method;
  TuneGrid grid;  // defaults
  if (m == "lasso") {
    double lambda;
    if (cfg.lambda_override) {
      lambda = *cfg.lambda_override;
    } else {
      const TuneResult t = cv_tune(problem, "lasso", grid, seed, opts);
      lambda = t.chosen.lambda;
      if (tuned_out) *tuned_out = t;
    }
    return fit_lasso_target(problem, lambda, opts);
  }
  if (m == "trans-lasso") {
    std::vector<int> J = cfg.informative;
    if (J.empty()) J = informative_by_contrast(problem, opts, seed);
    const TuneResult t = cv_tune(problem, "trans-lasso", grid, seed, opts, J);
    if (tuned_out) *tuned_out = t;
    const double lambda = cfg.lambda_override ? *cfg.lambda_override : t.chosen.lambda;
    return fit_trans_lasso_oracle(problem, J, t.lambda_w, lambda, opts);
  }
  if (m == "riw-tl" || m == "riw-tl-p" || m == "riw-tl-u") {
    RiwConfig rc;
    if (cfg.lambda_override) {
      rc.M = 2.0;
      rc.A = 1.0;
      rc.bandwidth = 0.2;
      rc.lambda = *cfg.lambda_override;
      rc.variant = m == "riw-tl-u"   ? WeightVariant::uniform
                   : m == "riw-tl-p" ? WeightVariant::parametric_gaussian
                                     : WeightVariant::kde;
      if (rc.variant == WeightVariant::uniform) rc.T = 1.5 * rc.M;
    } else {
      const TuneResult t = cv_tune(problem, m, grid, seed, opts);
      rc = t.chosen;
      if (tuned_out) *tuned_out = t;
    }
    rc.split_seed = seed;
    return m == "riw-tl-u" ? fit_riw_tl_u(problem, rc, opts) : fit_riw_tl(problem, rc, opts);
  }
  throw ConfigError("fit: unknown method '" + m + "'");
}

void run_fit(const RunConfig& cfg) {
  std::vector<std::string> columns;
  const TransferProblem problem = load_problem(cfg, &columns);
  const std::uint64_t seed = cfg.seed.value_or(1);
  const SolverOptions opts;

  const FitResult fit = dispatch_fit(cfg, problem, seed, opts, nullptr);

  fs::create_directories(cfg.out_dir);
  std::string beta_csv = "name,value\n";
  for (Index j = 0; j < fit.beta_hat.size(); ++j)
    beta_csv += columns[j] + "," + format_number(fit.beta_hat[j]) + "\n";
  write_text(cfg.out_dir / "beta.csv", beta_csv);
  write_text(cfg.out_dir / "selection_summary.csv", selection_summary_csv(fit));

  KeyValueConfig echo;
  echo.values["method"] = fit.method;
  echo.values["lambda"] = format_number(fit.lambda);
  echo.values["sur"] = format_number(sur(fit, problem));
  if (fit.tuning_trace) {
    echo.values["A"] = format_number(fit.tuning_trace->A);
    echo.values["M"] = format_number(fit.tuning_trace->M);
    echo.values["bandwidth"] = format_number(fit.tuning_trace->bandwidth);
    if (fit.tuning_trace->T) echo.values["T"] = format_number(*fit.tuning_trace->T);
  }
  for (std::size_t i = 0; i < fit.diagnostics.size(); ++i)
    echo.values["diagnostic_" + std::to_string(i)] = fit.diagnostics[i];
  write_text(cfg.out_dir / "metadata.txt", provenance_block(cfg, echo, seed, "fit", {}));
}

void run_tune(const RunConfig& cfg) {
  const TransferProblem problem = load_problem(cfg, nullptr);
  const std::uint64_t seed = cfg.seed.value_or(1);
  const SolverOptions opts;
  TuneGrid grid;
  std::vector<int> J = cfg.informative;
  if (cfg.method == "trans-lasso" && J.empty())
    J = informative_by_contrast(problem, opts, seed);
  const TuneResult t = cv_tune(problem, cfg.method, grid, seed, opts, J);

  fs::create_directories(cfg.out_dir);
  std::string table = "M,bandwidth,lambda,score,failed\n";
  for (const auto& row : t.table)
    table += format_number(row.M) + "," + format_number(row.bandwidth) + "," +
             format_number(row.lambda) + "," +
             (row.failed ? "inf" : format_number(row.score)) + "," +
             (row.failed ? "1" : "0") + "\n";
  write_text(cfg.out_dir / "score_table.csv", table);

  KeyValueConfig chosen;
  chosen.values["schema_version"] = std::to_string(kSchemaVersion);
  chosen.values["method"] = cfg.method;
  chosen.values["M"] = format_number(t.chosen.M);
  chosen.values["A"] = format_number(t.chosen.A);
  chosen.values["bandwidth"] = format_number(t.chosen.bandwidth);
  chosen.values["lambda"] = format_number(t.chosen.lambda);
  chosen.values["score"] = format_number(t.chosen_score);
  if (cfg.method == "riw-tl-u") chosen.values["T"] = format_number(t.chosen.T);
  if (cfg.method == "trans-lasso") chosen.values["lambda_w"] = format_number(t.lambda_w);
  write_text(cfg.out_dir / "chosen.cfg", chosen.serialize());
  write_text(cfg.out_dir / "metadata.txt", provenance_block(cfg, chosen, seed, "tune", {}));
}

}  // namespace

int run(const RunConfig& config) {
  try {
    switch (config.command) {
      case RunConfig::Command::simulate:
        run_simulate(config);
        return 0;
      case RunConfig::Command::fit:
        run_fit(config);
        return 0;
      case RunConfig::Command::tune:
        run_tune(config);
        return 0;
      case RunConfig::Command::fig1:
        run_fig1(config);
        return 0;
    }
    throw ConfigError("run: unknown command");
  } catch (const ConfigError& e) {
    emit_error(config, {2, "config", e.what()});
    return 2;
  } catch (const DimensionError& e) {
    emit_error(config, {3, "data", e.what()});
    return 3;
  } catch (const DataError& e) {
    emit_error(config, {3, "data", e.what()});
    return 3;
  } catch (const std::exception& e) {
    emit_error(config, {4, "numeric", e.what()});
    return 4;
  }
}

}  // namespace riwtl
