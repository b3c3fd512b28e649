#include "wbo/harness.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kArgumentError = 1;
constexpr int kCampaignError = 2;

std::vector<std::string> choices(std::initializer_list<const char*> v) { return {v.begin(), v.end()}; }

wbo::PointCloud read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) throw std::invalid_argument(path + ": non-numeric token in '" + line + "'");
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument(path + ": rows have different lengths");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no points");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return wbo::PointCloud::uniform(std::move(m));
}

// Config stored next to a record file, if any.
std::optional<wbo::CampaignConfig> sidecar_config(const std::string& records) {
  const std::string path = records + ".schema.json";
  std::ifstream in(path);
  if (!in) return std::nullopt;
  const auto doc = nlohmann::json::parse(in);
  return wbo::config_from_json(doc.at("config"));
}

int cmd_run(const std::string& config_path, int workers, bool resume, bool quiet) {
  const auto cfg = wbo::load_config(config_path);
  wbo::CampaignOptions opt;
  opt.workers = workers;
  opt.resume = resume;
  if (!quiet) {
    opt.progress = [last = std::size_t{0}](std::size_t done, std::size_t total) mutable {
      if (done == total || done >= last + 100) {
        std::fprintf(stderr, "\r%zu / %zu runs", done, total);
        if (done == total) std::fputc('\n', stderr);
        last = done;
      }
    };
  }
  const auto res = wbo::run_campaign(cfg, opt);
  std::printf("wrote %zu rows to %s (%zu resumed, %zu flagged fit failures)\n",
              res.records.size(), res.output.string().c_str(), res.resumed, res.failed);
  return kOk;
}

int cmd_summarize(const std::string& records, int table, int dim, std::optional<int> size,
                  const std::string& s2_mode, double spot_fraction) {
  const auto recs = wbo::read_records(records);
  const auto [xf, yf] = wbo::table_fields(table);
  const auto mode = s2_mode == "paper_compat" ? wbo::S2Mode::paper_compat : wbo::S2Mode::exact;
  std::printf("table %d (%s vs %s), dim %d, n = %d\n", table, xf.c_str(), yf.c_str(), dim,
              size.value_or(20 * dim));
  std::printf("%-12s %10s %12s %6s\n", "design", "r", "p", "pairs");
  for (auto t : wbo::kAllDesignTypes) {
    try {
      const auto c = wbo::summarize_correlations(recs, t, dim, xf, yf, size, mode);
      std::printf("%-12s %10.4f %12.4g %6d\n", wbo::to_string(t), c.r, c.p_value, c.n_pairs);
    } catch (const std::invalid_argument& e) {
      std::printf("%-12s %s\n", wbo::to_string(t), e.what());
    } catch (const std::domain_error& e) {
      std::printf("%-12s %s\n", wbo::to_string(t), e.what());
    }
  }
  if (spot_fraction > 0.0) {
    if (const auto cfg = sidecar_config(records)) {
      const auto check = wbo::spot_check(recs, *cfg, spot_fraction);
      std::printf("spot check: %zu rows recomputed, %zu mismatched\n", check.checked,
                  check.mismatched);
      for (const auto& m : check.messages) std::fprintf(stderr, "  %s\n", m.c_str());
      if (check.mismatched) return kCampaignError;
    } else {
      std::printf("spot check skipped: no %s.schema.json\n", records.c_str());
    }
  }
  return kOk;
}

int cmd_boxplot(const std::string& records, int dim, const std::string& metric) {
  const auto recs = wbo::read_records(records);
  const std::string m = metric == "delta" ? "delta_y" : "regret";
  std::printf("%s\n", wbo::boxplot_header().c_str());
  for (const auto& b : wbo::summarize_boxplots(recs, dim))
    if (b.metric == m) std::printf("%s\n", wbo::format_boxplot_row(b).c_str());
  return kOk;
}

int cmd_characterize(const std::string& problem, const std::string& type, int n,
                     std::uint64_t seed, std::optional<double> radius, std::optional<int> grid) {
  const auto& p = wbo::find_problem(problem);
  const auto t = wbo::parse_design_type(type);
  const int d = p.dim();
  const auto design = wbo::generate_design(p, t, n, seed, radius.value_or(wbo::default_radius(d)));
  const auto g = wbo::make_grid(d, grid.value_or(wbo::default_featurization_points(d)));
  const auto f = wbo::featurize(design, g, wbo::S2Mode::exact);
  const std::vector<double> ys(design.Y.data(), design.Y.data() + design.Y.size());
  const double s2p = wbo::w2_squared_to_dirac(ys, f.best_seen_y, wbo::S2Mode::paper_compat);
  std::printf("problem=%s type=%s n=%d seed=%llu s1=%.17g s2=%.17g s2_paper=%.17g y_best=%.17g\n",
              p.name().c_str(), wbo::to_string(t), n, static_cast<unsigned long long>(seed), f.s1,
              f.s2, s2p, f.best_seen_y);
  return kOk;
}

int cmd_w2(const std::string& a, const std::string& b) {
  const auto plan = wbo::w2_squared(read_points(a), read_points(b));
  std::printf("%.17g\n", plan.cost);
  return kOk;
}

int cmd_plot_data(const std::string& records, const std::vector<std::string>& kinds,
                  const std::string& out_dir) {
  const auto recs = wbo::read_records(records);
  for (const auto& k : kinds) {
    const auto path = wbo::emit_plot_data(recs, wbo::parse_plot_kind(k), out_dir);
    std::printf("%s\n", path.string().c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein characterization of initial designs for one-step Bayesian optimization"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run (or resume) a campaign described by a JSON config");
  std::string config;
  int workers = 1;
  bool resume = false, quiet = false;
  run->add_option("--config", config, "campaign config file")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
  run->add_flag("--resume", resume, "skip rows already present in the output file");
  run->add_flag("--quiet", quiet, "no progress output");

  auto* summarize = app.add_subcommand("summarize", "Pearson correlation tables (n = 20d unless --n)");
  std::string records;
  int table = 1, dim = 1;
  std::string s2_mode = "exact";
  double spot = 0.01;
  summarize->add_option("--records", records)->required()->check(CLI::ExistingFile);
  summarize->add_option("--table", table, "1: s2 vs RMSE, 2: RMSE vs SR delta, 3: s2 vs SR delta")
      ->required()
      ->check(CLI::IsMember({1, 2, 3}));
  summarize->add_option("--dim", dim)->required()->check(CLI::IsMember({1, 2}));
  std::optional<int> size;
  summarize->add_option("--n", size, "design size (default 20d)");
  summarize->add_option("--s2-mode", s2_mode)->check(CLI::IsMember(choices({"exact", "paper_compat"})));
  summarize->add_option("--spot-check", spot, "fraction of rows to recompute (0 disables)")
      ->check(CLI::Range(0.0, 1.0));

  auto* boxplot = app.add_subcommand("boxplot", "five-number summaries per design type and policy");
  std::string metric;
  boxplot->add_option("--records", records)->required()->check(CLI::ExistingFile);
  boxplot->add_option("--dim", dim)->required()->check(CLI::IsMember({1, 2}));
  boxplot->add_option("--metric", metric)->required()->check(CLI::IsMember(choices({"delta", "regret"})));

  auto* characterize = app.add_subcommand("characterize", "generate one design and print s1, s2");
  std::string problem, type;
  int n = 0;
  std::uint64_t seed = 0;
  std::optional<double> radius;
  std::optional<int> grid;
  characterize->add_option("--problem", problem)->required();
  characterize->add_option("--type", type)->required()->check(
      CLI::IsMember(choices({"lhs", "near-opt", "near-wrong"})));
  characterize->add_option("--n", n)->required()->check(CLI::Range(2, 100000));
  characterize->add_option("--seed", seed)->required();
  characterize->add_option("--radius", radius);
  characterize->add_option("--grid", grid, "featurization grid points per dimension");

  auto* w2 = app.add_subcommand("w2", "squared 2-Wasserstein distance between two point files");
  std::string file_a, file_b;
  w2->add_option("source", file_a)->required()->check(CLI::ExistingFile);
  w2->add_option("target", file_b)->required()->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("plot-data", "write tidy tables for the figures");
  std::vector<std::string> kinds{"scatter_s1_s2", "boxplot_delta", "boxplot_regret"};
  std::string out_dir = "plots";
  plot->add_option("--records", records)->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", kinds)->check(
      CLI::IsMember(choices({"scatter_s1_s2", "boxplot_delta", "boxplot_regret"})));
  plot->add_option("--out-dir", out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kArgumentError;
  }

  try {
    if (*run) return cmd_run(config, workers, resume, quiet);
    if (*summarize) return cmd_summarize(records, table, dim, size, s2_mode, spot);
    if (*boxplot) return cmd_boxplot(records, dim, metric);
    if (*characterize) return cmd_characterize(problem, type, n, seed, radius, grid);
    if (*w2) return cmd_w2(file_a, file_b);
    if (*plot) return cmd_plot_data(records, kinds, out_dir);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kArgumentError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCampaignError;
  }
  return kArgumentError;
}
