#pragma once

// Campaign orchestration: one GP fit and four one-step acquisitions per
// (problem, design type, size, replicate), persisted as delimiter-separated
// records and summarized into correlation tables and boxplot statistics.

#include "wbo/acquisition.hpp"
#include "wbo/design.hpp"
#include "wbo/gp.hpp"
#include "wbo/metrics.hpp"
#include "wbo/problems.hpp"
#include "wbo/rng.hpp"
#include "wbo/transport.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace wbo {

inline constexpr const char* kRecordSchemaVersion = "wbo-records/1";
inline constexpr const char* kOutputDirEnv = "WBO_OUTPUT_DIR";

struct CampaignConfig {
  std::vector<std::string> problems;
  std::vector<DesignType> design_types{std::begin(kAllDesignTypes), std::end(kAllDesignTypes)};
  std::vector<int> sizes;  // empty: {5d, floor(12.5d), 20d} per problem
  int replicates = 30;
  std::uint64_t base_seed = 20240229;
  std::optional<double> radius;              // default 0.05 sqrt(d)
  std::optional<int> featurization_grid;     // points per dim
  std::optional<int> acquisition_grid;       // points per dim
  S2Mode s2_mode = S2Mode::exact;
  double lcb_beta = 1.0;
  int gp_starts = 8;
  bool ard = false;
  std::string output_path = "records.csv";

  /// Every registered problem, optionally restricted to one dimension.
  static CampaignConfig defaults(std::optional<int> dim = std::nullopt) {
    CampaignConfig c;
    for (const auto& p : list_problems(dim)) c.problems.push_back(p.name());
    return c;
  }

  std::vector<int> sizes_for(int dim) const { return sizes.empty() ? default_sizes(dim) : sizes; }
  double radius_for(int dim) const { return radius.value_or(default_radius(dim)); }
  int featurization_points(int dim) const {
    return featurization_grid.value_or(default_featurization_points(dim));
  }
  int acquisition_points(int dim) const {
    return acquisition_grid.value_or(default_acquisition_points(dim));
  }

  void validate() const {
    if (problems.empty()) throw std::invalid_argument("config: no problems");
    for (const auto& name : problems) find_problem(name);
    if (design_types.empty()) throw std::invalid_argument("config: no design types");
    if (replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
    for (int n : sizes)
      if (n < 2) throw std::invalid_argument("config: sizes must be >= 2");
    if (radius && !(*radius > 0.0)) throw std::invalid_argument("config: radius must be > 0");
    if (featurization_grid && *featurization_grid < 2)
      throw std::invalid_argument("config: featurization_grid must be >= 2");
    if (acquisition_grid && *acquisition_grid < 2)
      throw std::invalid_argument("config: acquisition_grid must be >= 2");
    if (!(lcb_beta >= 0.0)) throw std::invalid_argument("config: lcb_beta must be >= 0");
    if (gp_starts < 1) throw std::invalid_argument("config: gp_starts must be >= 1");
  }

  /// Output path after the environment override: when WBO_OUTPUT_DIR is
  /// set, the file name is placed inside that directory.
  std::filesystem::path resolved_output() const {
    std::filesystem::path p(output_path);
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir)
      return std::filesystem::path(dir) / p.filename();
    return p;
  }
};

inline nlohmann::json to_json(const CampaignConfig& c) {
  nlohmann::json j;
  j["problems"] = c.problems;
  std::vector<std::string> types;
  for (auto t : c.design_types) types.emplace_back(to_string(t));
  j["design_types"] = types;
  j["sizes"] = c.sizes.empty() ? nlohmann::json("rule") : nlohmann::json(c.sizes);
  j["replicates"] = c.replicates;
  j["base_seed"] = c.base_seed;
  j["radius"] = c.radius ? nlohmann::json(*c.radius) : nlohmann::json("default");
  j["featurization_grid"] =
      c.featurization_grid ? nlohmann::json(*c.featurization_grid) : nlohmann::json("default");
  j["acquisition_grid"] =
      c.acquisition_grid ? nlohmann::json(*c.acquisition_grid) : nlohmann::json("default");
  j["s2_mode"] = to_string(c.s2_mode);
  j["lcb_beta"] = c.lcb_beta;
  j["gp_starts"] = c.gp_starts;
  j["ard"] = c.ard;
  j["output_path"] = c.output_path;
  return j;
}

/// Parse a config document. Keys mirror CampaignConfig; "problems" may be a
/// list of names or "all", "1d", "2d". Unknown keys are rejected.
inline CampaignConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected an object");
  static const char* known[] = {"problems",         "design_types",       "sizes",
                                "replicates",       "base_seed",          "radius",
                                "featurization_grid", "acquisition_grid", "s2_mode",
                                "lcb_beta",         "gp_starts",          "ard",
                                "output_path"};
  for (const auto& [key, _] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known))
      throw std::invalid_argument("config: unknown key '" + key + "'");

  CampaignConfig c;
  try {
    if (!j.contains("problems") || j["problems"] == "all") {
      c = CampaignConfig::defaults();
    } else if (j["problems"] == "1d") {
      c = CampaignConfig::defaults(1);
    } else if (j["problems"] == "2d") {
      c = CampaignConfig::defaults(2);
    } else {
      c.problems = j["problems"].get<std::vector<std::string>>();
    }
    if (j.contains("design_types")) {
      c.design_types.clear();
      for (const auto& s : j["design_types"].get<std::vector<std::string>>())
        c.design_types.push_back(parse_design_type(s));
    }
    if (j.contains("sizes") && j["sizes"] != "rule") c.sizes = j["sizes"].get<std::vector<int>>();
    if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
    if (j.contains("base_seed")) c.base_seed = j["base_seed"].get<std::uint64_t>();
    auto opt_num = [&](const char* key, auto& field) {
      if (j.contains(key) && j[key] != "default")
        field = j[key].get<typename std::remove_reference_t<decltype(field)>::value_type>();
    };
    opt_num("radius", c.radius);
    opt_num("featurization_grid", c.featurization_grid);
    opt_num("acquisition_grid", c.acquisition_grid);
    if (j.contains("s2_mode")) {
      const auto m = j["s2_mode"].get<std::string>();
      if (m == "exact") c.s2_mode = S2Mode::exact;
      else if (m == "paper_compat") c.s2_mode = S2Mode::paper_compat;
      else throw std::invalid_argument("config: unknown s2_mode '" + m + "'");
    }
    if (j.contains("lcb_beta")) c.lcb_beta = j["lcb_beta"].get<double>();
    if (j.contains("gp_starts")) c.gp_starts = j["gp_starts"].get<int>();
    if (j.contains("ard")) c.ard = j["ard"].get<bool>();
    if (j.contains("output_path")) c.output_path = j["output_path"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Records

enum class RunStatus { ok, fit_error };

inline const char* to_string(RunStatus s) { return s == RunStatus::ok ? "ok" : "fit_error"; }

struct PolicyOutcome {
  Point x_prime;
  double y_prime = 0.0;
  double delta_y = 0.0;
  double regret = 0.0;
  double acq_value = 0.0;
};

struct ExperimentRecord {
  std::string problem;
  int dim = 0;
  DesignType design_type = DesignType::lhs;
  int n = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::ok;
  double s1 = 0.0;
  double s2_exact = 0.0;
  double s2_paper = 0.0;
  double y_best_seen = 0.0;
  Eigen::VectorXd gp_lengthscales;
  double gp_signal_variance = 0.0;
  double gp_mean = 0.0;
  double gp_nugget = 0.0;
  double gp_lml = 0.0;
  double rmse = 0.0;
  std::array<PolicyOutcome, 4> outcomes;

  bool ok() const noexcept { return status == RunStatus::ok; }
  const PolicyOutcome& outcome(Policy p) const { return outcomes[static_cast<std::size_t>(p)]; }
  PolicyOutcome& outcome(Policy p) { return outcomes[static_cast<std::size_t>(p)]; }
};

inline std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

/// Column names, in file order.
inline const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"problem",        "dim",
                               "design_type",    "n",
                               "replicate",      "seed",
                               "status",         "s1",
                               "s2_exact",       "s2_paper",
                               "y_best_seen",    "gp_lengthscale",
                               "gp_lengthscale_2", "gp_signal_variance",
                               "gp_mean",        "gp_nugget",
                               "gp_lml",         "rmse"};
    for (auto p : kAllPolicies) {
      const auto pre = lower(to_string(p)) + "_";
      for (const char* f : {"x0", "x1", "y_prime", "delta_y", "regret", "acq_value"})
        c.push_back(pre + f);
    }
    return c;
  }();
  return cols;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_record(const ExperimentRecord& r) {
  std::vector<std::string> f;
  f.reserve(record_columns().size());
  f.push_back(r.problem);
  f.push_back(std::to_string(r.dim));
  f.emplace_back(to_string(r.design_type));
  f.push_back(std::to_string(r.n));
  f.push_back(std::to_string(r.replicate));
  f.push_back(std::to_string(r.seed));
  f.emplace_back(to_string(r.status));
  f.push_back(format_double(r.s1));
  f.push_back(format_double(r.s2_exact));
  f.push_back(format_double(r.s2_paper));
  f.push_back(format_double(r.y_best_seen));
  if (r.ok()) {
    f.push_back(format_double(r.gp_lengthscales[0]));
    f.push_back(r.gp_lengthscales.size() > 1 ? format_double(r.gp_lengthscales[1]) : "");
    for (double v : {r.gp_signal_variance, r.gp_mean, r.gp_nugget, r.gp_lml, r.rmse})
      f.push_back(format_double(v));
    for (const auto& o : r.outcomes) {
      f.push_back(format_double(o.x_prime[0]));
      f.push_back(o.x_prime.size() > 1 ? format_double(o.x_prime[1]) : "");
      for (double v : {o.y_prime, o.delta_y, o.regret, o.acq_value}) f.push_back(format_double(v));
    }
  } else {
    f.resize(record_columns().size());
  }
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) line += ',';
    line += f[i];
  }
  return line;
}

inline std::string record_header() {
  std::string h;
  for (std::size_t i = 0; i < record_columns().size(); ++i) {
    if (i) h += ',';
    h += record_columns()[i];
  }
  return h;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

namespace detail {

inline double parse_double(const std::string& s, const char* column) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument(std::string("records: bad number in column ") + column + ": '" + s +
                                "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& s, const char* column) {
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument(std::string("records: bad integer in column ") + column + ": '" +
                                s + "'");
  return v;
}

}  // namespace detail

inline ExperimentRecord parse_record(const std::string& line) {
  const auto f = split_csv(line);
  const auto& cols = record_columns();
  if (f.size() != cols.size())
    throw std::invalid_argument("records: expected " + std::to_string(cols.size()) +
                                " fields, found " + std::to_string(f.size()));
  ExperimentRecord r;
  std::size_t i = 0;
  r.problem = f[i++];
  r.dim = detail::parse_int<int>(f[i++], "dim");
  r.design_type = parse_design_type(f[i++]);
  r.n = detail::parse_int<int>(f[i++], "n");
  r.replicate = detail::parse_int<int>(f[i++], "replicate");
  r.seed = detail::parse_int<std::uint64_t>(f[i++], "seed");
  const auto& st = f[i++];
  if (st == "ok") r.status = RunStatus::ok;
  else if (st == "fit_error") r.status = RunStatus::fit_error;
  else throw std::invalid_argument("records: unknown status '" + st + "'");
  auto next = [&]() { const auto& c = cols[i]; return detail::parse_double(f[i++], c.c_str()); };
  r.s1 = next();
  r.s2_exact = next();
  r.s2_paper = next();
  r.y_best_seen = next();
  if (!r.ok()) return r;
  const double l0 = next();
  if (f[i].empty()) {
    ++i;
    r.gp_lengthscales = Eigen::VectorXd::Constant(1, l0);
  } else {
    r.gp_lengthscales = Eigen::Vector2d(l0, next());
  }
  r.gp_signal_variance = next();
  r.gp_mean = next();
  r.gp_nugget = next();
  r.gp_lml = next();
  r.rmse = next();
  for (auto& o : r.outcomes) {
    const double x0 = next();
    if (f[i].empty()) {
      ++i;
      o.x_prime = Point::Constant(1, x0);
    } else {
      o.x_prime = Eigen::Vector2d(x0, next());
    }
    o.y_prime = next();
    o.delta_y = next();
    o.regret = next();
    o.acq_value = next();
  }
  return r;
}

/// Read a record file; a trailing line without newline is treated as an
/// interrupted write and skipped.
inline std::vector<ExperimentRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("records: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<ExperimentRecord> out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (header) {
      if (line != record_header())
        throw std::invalid_argument("records: header does not match schema " +
                                    std::string(kRecordSchemaVersion));
      header = false;
      continue;
    }
    out.push_back(parse_record(line));
  }
  if (header) throw std::invalid_argument("records: missing header in " + path.string());
  return out;
}

/// Numeric field by column name; "s2" resolves to the column of `mode`.
inline double record_field(const ExperimentRecord& r, const std::string& name,
                           S2Mode mode = S2Mode::exact) {
  if (name == "s1") return r.s1;
  if (name == "s2") return mode == S2Mode::exact ? r.s2_exact : r.s2_paper;
  if (name == "s2_exact") return r.s2_exact;
  if (name == "s2_paper") return r.s2_paper;
  if (name == "y_best_seen") return r.y_best_seen;
  if (name == "n") return r.n;
  if (!r.ok()) throw std::invalid_argument("record_field: '" + name + "' missing on a failed row");
  if (name == "rmse") return r.rmse;
  if (name == "gp_lengthscale") return r.gp_lengthscales[0];
  if (name == "gp_signal_variance") return r.gp_signal_variance;
  if (name == "gp_mean") return r.gp_mean;
  if (name == "gp_nugget") return r.gp_nugget;
  if (name == "gp_lml") return r.gp_lml;
  for (auto p : kAllPolicies) {
    const auto pre = lower(to_string(p)) + "_";
    if (name.rfind(pre, 0) != 0) continue;
    const auto rest = name.substr(pre.size());
    const auto& o = r.outcome(p);
    if (rest == "y_prime") return o.y_prime;
    if (rest == "delta_y") return o.delta_y;
    if (rest == "regret") return o.regret;
    if (rest == "acq_value") return o.acq_value;
  }
  throw std::invalid_argument("record_field: unknown field '" + name + "'");
}

// ---------------------------------------------------------------------------
// Running

struct RunKey {
  std::string problem;
  DesignType design_type;
  int n;
  int replicate;
};

/// Child seed: a pure function of the run tuple, so adding or removing
/// problems leaves every other run unchanged.
inline std::uint64_t derive_seed(std::uint64_t base_seed, const std::string& problem,
                                 DesignType type, int n, int replicate) {
  std::uint64_t s = combine_seed(base_seed, hash_string(problem));
  s = combine_seed(s, static_cast<std::uint64_t>(type) + 1);
  s = combine_seed(s, static_cast<std::uint64_t>(n));
  return combine_seed(s, static_cast<std::uint64_t>(replicate));
}

/// Canonical run order: problems as listed, then design type, size and
/// replicate.
inline std::vector<RunKey> campaign_runs(const CampaignConfig& cfg) {
  std::vector<RunKey> keys;
  for (const auto& name : cfg.problems) {
    const int dim = find_problem(name).dim();
    for (auto t : cfg.design_types)
      for (int n : cfg.sizes_for(dim))
        for (int r = 0; r < cfg.replicates; ++r) keys.push_back({name, t, n, r});
  }
  return keys;
}

/// Per-dimension grids and per-problem grid values, shared by all runs.
class CampaignContext {
 public:
  explicit CampaignContext(const CampaignConfig& cfg) : cfg_(cfg) {
    for (const auto& name : cfg.problems) {
      const auto& p = find_problem(name);
      const int d = p.dim();
      if (!feat_.count(d)) {
        feat_.emplace(d, make_grid(d, cfg.featurization_points(d)));
        acq_.emplace(d, make_grid(d, cfg.acquisition_points(d)));
      }
      if (!truth_.count(name)) truth_.emplace(name, evaluate_on_grid(p, acq_.at(d)));
    }
  }

  const CampaignConfig& config() const { return cfg_; }
  const Grid& featurization_grid(int d) const { return feat_.at(d); }
  const Grid& acquisition_grid(int d) const { return acq_.at(d); }
  const Eigen::VectorXd& truth(const std::string& problem) const { return truth_.at(problem); }

  GPConfig gp_config(std::uint64_t run_seed) const {
    GPConfig g;
    g.starts = cfg_.gp_starts;
    g.ard = cfg_.ard;
    g.seed = combine_seed(run_seed, 4);
    return g;
  }

 private:
  CampaignConfig cfg_;
  std::map<int, Grid> feat_;
  std::map<int, Grid> acq_;
  std::map<std::string, Eigen::VectorXd> truth_;
};

/// Everything one run produces besides the record, for inspection.
struct RunArtifacts {
  Design design;
  std::optional<GPModel> model;
  std::string error;
};

inline ExperimentRecord run_one(const CampaignContext& ctx, const RunKey& key,
                                RunArtifacts* artifacts = nullptr) {
  const auto& cfg = ctx.config();
  const auto& p = find_problem(key.problem);
  const int d = p.dim();

  ExperimentRecord rec;
  rec.problem = key.problem;
  rec.dim = d;
  rec.design_type = key.design_type;
  rec.n = key.n;
  rec.replicate = key.replicate;
  rec.seed = derive_seed(cfg.base_seed, key.problem, key.design_type, key.n, key.replicate);

  auto design = generate_design(p, key.design_type, key.n, rec.seed, cfg.radius_for(d));
  const auto feat = featurize(design, ctx.featurization_grid(d), S2Mode::exact);
  rec.s1 = feat.s1;
  rec.s2_exact = feat.s2;
  const std::vector<double> ys(design.Y.data(), design.Y.data() + design.Y.size());
  rec.s2_paper = w2_squared_to_dirac(ys, feat.best_seen_y, S2Mode::paper_compat);
  rec.y_best_seen = feat.best_seen_y;

  std::optional<GPModel> model;
  try {
    model.emplace(fit_mle(design.X, design.Y, ctx.gp_config(rec.seed)));
  } catch (const FitError& e) {
    rec.status = RunStatus::fit_error;
    if (artifacts) artifacts->error = e.what();
  }

  if (model) {
    const auto& h = model->hyperparams();
    rec.gp_lengthscales = h.lengthscales;
    rec.gp_signal_variance = h.signal_variance;
    rec.gp_mean = h.mean_const;
    rec.gp_nugget = h.nugget;
    rec.gp_lml = model->log_marginal_likelihood();

    const auto& grid = ctx.acquisition_grid(d);
    const auto post = evaluate_posterior(*model, grid);
    const auto& f = ctx.truth(key.problem);
    rec.rmse = rmse(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
                    std::span<const double>(post.mean.data(),
                                            static_cast<std::size_t>(post.mean.size())));
    for (auto pol : kAllPolicies) {
      const auto c = choose(pol, post, grid, rec.y_best_seen, cfg.lcb_beta);
      auto& o = rec.outcome(pol);
      o.x_prime = c.x_prime;
      o.y_prime = f[c.grid_index];
      o.delta_y = delta_y(rec.y_best_seen, o.y_prime);
      o.regret = immediate_regret(o.y_prime, p.y_star());
      o.acq_value = c.acq_value;
    }
  }
  if (artifacts) {
    artifacts->design = std::move(design);
    artifacts->model = std::move(model);
  }
  return rec;
}

struct CampaignOptions {
  int workers = 1;
  bool resume = false;
  bool write_files = true;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct CampaignResult {
  std::vector<ExperimentRecord> records;
  std::size_t resumed = 0;  // rows taken over from an existing file
  std::size_t failed = 0;
  std::filesystem::path output;
};

inline nlohmann::json schema_document(const CampaignConfig& cfg) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : record_columns()) {
    std::string type = "float";
    if (c == "problem" || c == "design_type" || c == "status") type = "string";
    else if (c == "dim" || c == "n" || c == "replicate" || c == "seed") type = "integer";
    cols.push_back({{"name", c}, {"type", type}});
  }
  return {{"schema", kRecordSchemaVersion},
          {"delimiter", ","},
          {"float_format", "%.17g"},
          {"missing", "empty field: gp and policy columns on fit_error rows; "
                      "second coordinate columns in 1D"},
          {"columns", cols},
          {"config", to_json(cfg)}};
}

inline std::string key_string(const RunKey& k) {
  return k.problem + "/" + to_string(k.design_type) + "/" + std::to_string(k.n) + "/" +
         std::to_string(k.replicate);
}

/// Execute (or resume) a campaign. Rows are appended in canonical order as
/// soon as every earlier row is done, so an interrupted file is always a
/// valid prefix.
inline CampaignResult run_campaign(const CampaignConfig& cfg, const CampaignOptions& opt = {}) {
  cfg.validate();
  const auto keys = campaign_runs(cfg);
  CampaignResult result;
  result.output = cfg.resolved_output();
  std::vector<std::optional<ExperimentRecord>> slots(keys.size());

  std::ofstream out;
  if (opt.write_files) {
    if (result.output.has_parent_path())
      std::filesystem::create_directories(result.output.parent_path());
    std::size_t keep_bytes = 0;
    if (opt.resume && std::filesystem::exists(result.output) &&
        std::filesystem::file_size(result.output) > 0) {
      const auto prior = read_records(result.output);
      for (std::size_t i = 0; i < prior.size(); ++i) {
        if (i >= keys.size() || prior[i].problem != keys[i].problem ||
            prior[i].design_type != keys[i].design_type || prior[i].n != keys[i].n ||
            prior[i].replicate != keys[i].replicate)
          throw std::invalid_argument("resume: existing row " + std::to_string(i + 1) +
                                      " does not match run " +
                                      (i < keys.size() ? key_string(keys[i]) : "<none>"));
        slots[i] = prior[i];
      }
      result.resumed = prior.size();
      // Drop a partially written trailing line, if any.
      std::ifstream in(result.output, std::ios::binary);
      std::string line;
      for (std::size_t i = 0; i <= prior.size() && std::getline(in, line); ++i)
        keep_bytes += line.size() + 1;
    }
    if (keep_bytes > 0) {
      std::filesystem::resize_file(result.output, keep_bytes);
      out.open(result.output, std::ios::binary | std::ios::app);
    } else {
      out.open(result.output, std::ios::binary | std::ios::trunc);
      out << record_header() << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + result.output.string());
    std::ofstream schema(result.output.string() + ".schema.json", std::ios::binary);
    schema << schema_document(cfg).dump(2) << '\n';
  }

  const CampaignContext ctx(cfg);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{result.resumed};
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= keys.size()) return;
      try {
        auto rec = run_one(ctx, keys[i]);
        std::lock_guard<std::mutex> lock(mu);
        slots[i] = std::move(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next = keys.size();
      }
      cv.notify_all();
    }
  };

  const int n_workers = std::max(1, opt.workers);
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  std::thread single;
  if (n_workers == 1) single = std::thread(worker);

  std::size_t written = result.resumed;
  {
    std::unique_lock<std::mutex> lock(mu);
    while (written < keys.size()) {
      cv.wait(lock, [&] { return failure || (written < keys.size() && slots[written]); });
      if (failure) break;
      while (written < keys.size() && slots[written]) {
        if (out.is_open()) out << format_record(*slots[written]) << '\n';
        ++written;
      }
      if (out.is_open()) out.flush();
      if (opt.progress) {
        lock.unlock();
        opt.progress(written, keys.size());
        lock.lock();
      }
    }
  }
  for (auto& t : pool) t.join();
  if (single.joinable()) single.join();
  if (failure) std::rethrow_exception(failure);

  result.records.reserve(keys.size());
  for (auto& s : slots) {
    if (!s->ok()) ++result.failed;
    result.records.push_back(std::move(*s));
  }
  if (opt.write_files) {
    nlohmann::json report{{"rows", result.records.size()},
                          {"failed_rows", result.failed},
                          {"resumed_rows", result.resumed}};
    std::ofstream rep(result.output.string() + ".report.json", std::ios::binary);
    rep << report.dump(2) << '\n';
  }
  return result;
}

// ---------------------------------------------------------------------------
// Summaries

/// Pearson correlation over the successful rows of one design type and
/// dimension, pooled across problems and replicates, at n = 20d unless a
/// size is given.
inline CorrelationResult summarize_correlations(const std::vector<ExperimentRecord>& records,
                                                DesignType type, int dim,
                                                const std::string& x_field,
                                                const std::string& y_field,
                                                std::optional<int> size_filter = std::nullopt,
                                                S2Mode s2_mode = S2Mode::exact) {
  const int n = size_filter.value_or(20 * dim);
  std::vector<double> u, v;
  for (const auto& r : records) {
    if (!r.ok() || r.design_type != type || r.dim != dim || r.n != n) continue;
    u.push_back(record_field(r, x_field, s2_mode));
    v.push_back(record_field(r, y_field, s2_mode));
  }
  if (u.size() < 3)
    throw std::invalid_argument("summarize_correlations: " + std::to_string(u.size()) +
                                " matching rows, need at least 3");
  return pearson(u, v);
}

/// The three correlation tables as (x, y) field pairs.
inline std::pair<std::string, std::string> table_fields(int table) {
  switch (table) {
    case 1: return {"s2", "rmse"};
    case 2: return {"rmse", "sr_delta_y"};
    case 3: return {"s2", "sr_delta_y"};
  }
  throw std::invalid_argument("table must be 1, 2 or 3");
}

/// Linear-interpolation sample quantile (R type 7) of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct FiveNumber {
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  double whisker_low = 0.0, whisker_high = 0.0;  // furthest points within 1.5 IQR
};

inline FiveNumber five_number(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  FiveNumber s;
  s.count = v.size();
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile_sorted(v, 0.25);
  s.median = quantile_sorted(v, 0.5);
  s.q3 = quantile_sorted(v, 0.75);
  const double iqr = s.q3 - s.q1;
  s.whisker_low = *std::lower_bound(v.begin(), v.end(), s.q1 - 1.5 * iqr);
  s.whisker_high = *(std::upper_bound(v.begin(), v.end(), s.q3 + 1.5 * iqr) - 1);
  return s;
}

struct BoxplotRow {
  int dim = 0;
  DesignType design_type = DesignType::lhs;
  Policy policy = Policy::sr;
  std::string metric;  // "delta_y" or "regret"
  FiveNumber stats;
};

/// Five-number summaries of delta_y and regret per (design type, policy),
/// pooled over problems and sizes. Groups without successful rows are left
/// out.
inline std::vector<BoxplotRow> summarize_boxplots(const std::vector<ExperimentRecord>& records,
                                                  int dim) {
  std::vector<BoxplotRow> rows;
  for (const char* metric : {"delta_y", "regret"}) {
    for (auto t : kAllDesignTypes) {
      for (auto p : kAllPolicies) {
        std::vector<double> v;
        for (const auto& r : records) {
          if (!r.ok() || r.dim != dim || r.design_type != t) continue;
          const auto& o = r.outcome(p);
          v.push_back(std::string(metric) == "delta_y" ? o.delta_y : o.regret);
        }
        if (v.empty()) continue;
        rows.push_back({dim, t, p, metric, five_number(std::move(v))});
      }
    }
  }
  return rows;
}

inline std::string boxplot_header() {
  return "dim,design_type,policy,metric,count,min,q1,median,q3,max,whisker_low,whisker_high";
}

inline std::string format_boxplot_row(const BoxplotRow& b) {
  std::string s = std::to_string(b.dim) + "," + to_string(b.design_type) + "," +
                  to_string(b.policy) + "," + b.metric + "," + std::to_string(b.stats.count);
  for (double v : {b.stats.min, b.stats.q1, b.stats.median, b.stats.q3, b.stats.max,
                   b.stats.whisker_low, b.stats.whisker_high})
    s += "," + format_double(v);
  return s;
}

enum class PlotKind { scatter_s1_s2, boxplot_delta, boxplot_regret };

inline PlotKind parse_plot_kind(const std::string& s) {
  if (s == "scatter_s1_s2") return PlotKind::scatter_s1_s2;
  if (s == "boxplot_delta") return PlotKind::boxplot_delta;
  if (s == "boxplot_regret") return PlotKind::boxplot_regret;
  throw std::invalid_argument("unknown plot kind '" + s +
                              "' (expected scatter_s1_s2, boxplot_delta, boxplot_regret)");
}

inline const char* to_string(PlotKind k) {
  switch (k) {
    case PlotKind::scatter_s1_s2: return "scatter_s1_s2";
    case PlotKind::boxplot_delta: return "boxplot_delta";
    case PlotKind::boxplot_regret: return "boxplot_regret";
  }
  return "?";
}

/// Write a tidy table for one figure kind into `dir`; returns the file.
inline std::filesystem::path emit_plot_data(const std::vector<ExperimentRecord>& records,
                                            PlotKind kind, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = dir / (std::string(to_string(kind)) + ".csv");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (kind == PlotKind::scatter_s1_s2) {
    out << "problem,dim,design_type,n,replicate,s1,s2\n";
    for (const auto& r : records)
      out << r.problem << ',' << r.dim << ',' << to_string(r.design_type) << ',' << r.n << ','
          << r.replicate << ',' << format_double(r.s1) << ',' << format_double(r.s2_exact)
          << '\n';
    return path;
  }
  const std::string metric = kind == PlotKind::boxplot_delta ? "delta_y" : "regret";
  out << boxplot_header() << '\n';
  std::vector<int> dims;
  for (const auto& r : records)
    if (std::find(dims.begin(), dims.end(), r.dim) == dims.end()) dims.push_back(r.dim);
  std::sort(dims.begin(), dims.end());
  for (int d : dims)
    for (const auto& b : summarize_boxplots(records, d))
      if (b.metric == metric) out << format_boxplot_row(b) << '\n';
  return path;
}

// ---------------------------------------------------------------------------
// Verification

struct SpotCheck {
  std::size_t checked = 0;
  std::size_t mismatched = 0;
  std::vector<std::string> messages;
};

/// Recompute the stored acquisition criteria of a deterministic ~`fraction`
/// sample of successful rows from the stored hyperparameters, and compare
/// with the recorded values and chosen points.
inline SpotCheck spot_check(const std::vector<ExperimentRecord>& records,
                            const CampaignConfig& cfg, double fraction = 0.01,
                            double tolerance = 1e-9) {
  SpotCheck out;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].ok()) idx.push_back(i);
  if (idx.empty()) return out;
  const auto want = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size()))));
  Rng rng(combine_seed(cfg.base_seed, 0x5eed));
  const auto perm = rng.permutation(idx.size());
  std::map<int, Grid> grids;
  for (std::size_t s = 0; s < want && s < idx.size(); ++s) {
    const auto& r = records[idx[perm[s]]];
    const auto& p = find_problem(r.problem);
    if (!grids.count(r.dim)) grids.emplace(r.dim, make_grid(r.dim, cfg.acquisition_points(r.dim)));
    const auto& grid = grids.at(r.dim);
    const auto design = generate_design(p, r.design_type, r.n, r.seed, cfg.radius_for(r.dim));
    GPHyperparams h;
    h.lengthscales = r.gp_lengthscales;
    h.signal_variance = r.gp_signal_variance;
    h.mean_const = r.gp_mean;
    h.nugget = r.gp_nugget;
    const GPModel model(h, design.X, design.Y);
    const auto post = evaluate_posterior(model, grid);
    ++out.checked;
    bool bad = false;
    for (auto pol : kAllPolicies) {
      const auto c = choose(pol, post, grid, r.y_best_seen, cfg.lcb_beta);
      const auto& o = r.outcome(pol);
      const double scale = std::max(1.0, std::abs(o.acq_value));
      if (std::abs(c.acq_value - o.acq_value) > tolerance * scale ||
          (c.x_prime - o.x_prime).lpNorm<Eigen::Infinity>() > 0.0) {
        bad = true;
        out.messages.push_back(r.problem + "/" + to_string(r.design_type) + "/n=" +
                               std::to_string(r.n) + "/rep=" + std::to_string(r.replicate) +
                               ": " + to_string(pol) + " recorded " + format_double(o.acq_value) +
                               ", recomputed " + format_double(c.acq_value));
      }
    }
    if (bad) ++out.mismatched;
  }
  return out;
}

}  // namespace wbo
