// cqed: table building, single drops, campaigns and campaign analysis.

#include "cqed/pipeline.hpp"
#include "svg_plot.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using namespace cqed;
using ojson = nlohmann::ordered_json;

namespace {

enum Exit { ok = 0, usage = 1, solver = 2, missing = 3, bad_data = 4 };

struct Failure {
  int code;
  std::string message;
};

// Every leaf of the config JSON becomes a --dotted.path flag.
void collect_leaves(const ojson& j, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      collect_leaves(*it, path, out);
    } else if (path != "schema_version") {
      out.push_back(path);
    }
  }
}

struct ConfigOptions {
  std::string preset = "full3d";
  std::string file;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> flags;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "Starting configuration: full3d, full3d_reduced, axial_pinned")
        ->capture_default_str();
    app->add_option("--config", file, "JSON config file applied over the preset");
    const ojson defaults = to_json(RunConfig{});
    std::vector<std::string> leaves;
    collect_leaves(defaults, "", leaves);
    for (const auto& path : leaves) {
      const ojson& d = defaults.at(ojson::json_pointer("/" + replace_dots(path)));
      CLI::Option* o = app->add_option("--" + path, values[path], "default " + d.dump());
      o->group("Config keys");
      flags.emplace_back(path, o);
    }
  }

  static std::string replace_dots(std::string s) {
    for (char& c : s)
      if (c == '.') c = '/';
    return s;
  }

  RunConfig resolve() const {
    RunConfig base = RunConfig::preset(preset);
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw Failure{missing, "cannot open config '" + file + "'"};
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const std::exception& e) {
        throw Failure{bad_data, "config '" + file + "': " + e.what()};
      }
      base = run_config_from_json(j, base);
    }
    nlohmann::json j = to_json(base);
    if (const char* seed = std::getenv("SIM_SEED")) {
      try {
        j["campaign"]["master_seed"] = std::stoull(seed);
      } catch (const std::exception&) {
        throw Failure{usage, "SIM_SEED must be an unsigned integer"};
      }
    }
    for (const auto& [path, option] : flags) {
      if (option->count() == 0) continue;
      const std::string& text = values.at(path);
      nlohmann::json v;
      try {
        v = nlohmann::json::parse(text);
      } catch (const std::exception&) {
        v = text;
      }
      j[nlohmann::json::json_pointer("/" + replace_dots(path))] = v;
    }
    RunConfig c = run_config_from_json(j, RunConfig::preset(preset));
    c.validate();
    return c;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Failure{missing, "cannot write '" + path + "'"};
  return out;
}

RadialMaps tables_or_fail(const std::string& path) {
  try {
    return load_tables(path);
  } catch (const std::exception& e) {
    throw Failure{missing, "tables: " + std::string(e.what()) + " (run `cqed tables` first)"};
  }
}

int cmd_tables(const RunConfig& config, const std::string& out_path, unsigned jobs) {
  Tables tables = build_tables(config, jobs);
  write_tables(tables, config, out_path);
  const ojson report = calibration_report(tables, config);
  auto report_out = open_out(out_path + ".report.json");
  report_out << report.dump(2) << '\n';
  std::cout << report.dump(2) << '\n';
  return ok;
}

void trajectory_svg(const std::string& path, const TrajectoryRecord& rec) {
  svg::Series t_noisy, t_filt, rho, rho_est, rate, rate_est, level, yz;
  t_noisy.color = "#bbbbbb";
  rho_est.color = rate_est.color = "#c0392b";
  for (const auto& s : rec.samples) {
    const double us = s.t * 1e6;
    t_noisy.x.push_back(us), t_noisy.y.push_back(s.t_noisy);
    t_filt.x.push_back(us), t_filt.y.push_back(s.t_filtered);
    rho.x.push_back(us), rho.y.push_back(s.rho * 1e6);
    rho_est.x.push_back(us), rho_est.y.push_back(s.rho_est * 1e6);
    rate.x.push_back(us), rate.y.push_back(s.rho_dot);
    rate_est.x.push_back(us), rate_est.y.push_back(s.rho_dot_est);
    level.x.push_back(us), level.y.push_back(static_cast<int>(s.level));
    yz.x.push_back(s.y * 1e6), yz.y.push_back(s.z * 1e6);
  }
  auto out = open_out(path);
  svg::stacked(out, {{"T (noisy, filtered) vs t [us]", {t_noisy, t_filt}},
                     {"rho [um] (true, estimated)", {rho, rho_est}},
                     {"rho_dot [m/s] (true, estimated)", {rate, rate_est}},
                     {"drive level (0 exlo .. 3 exhi)", {level}, true},
                     {"trajectory z vs y [um]", {yz}}});
}

int cmd_run(const RunConfig& config, const std::string& tables_path, std::uint64_t index,
            const std::string& prefix, bool plot) {
  const RadialMaps maps = tables_or_fail(tables_path);
  const CampaignSpec spec = config.campaign_spec(noise_calibration(maps, config).model);
  const TrajectoryRecord rec = run_drop(spec, maps, index);
  const MeritReport report = drop_report(rec, spec, maps, index);
  const ojson cfg = to_json(config);
  {
    auto out = open_out(prefix + ".csv");
    write_trajectory_csv(out, rec, cfg);
  }
  {
    auto out = open_out(prefix + ".json");
    out << trajectory_json(rec, report, cfg).dump(2) << '\n';
  }
  if (plot) trajectory_svg(prefix + ".svg", rec);
  std::cout << to_json(report).dump(2) << '\n';
  return ok;
}

int cmd_batch(const RunConfig& config, const std::string& tables_path, const std::string& prefix,
              unsigned jobs) {
  const RadialMaps maps = tables_or_fail(tables_path);
  CampaignSpec spec = config.campaign_spec(noise_calibration(maps, config).model);
  spec.jobs = jobs;
  const CampaignResult result = run_campaign(spec, maps);
  {
    auto out = open_out(prefix + ".jsonl");
    write_reports_jsonl(out, result.reports);
  }
  ojson summary = to_json(result.summary);
  summary["config"] = to_json(config);
  {
    auto out = open_out(prefix + ".summary.json");
    out << summary.dump(2) << '\n';
  }
  std::cout << summary.dump(2) << '\n';
  return ok;
}

std::vector<double> merits(const std::vector<MeritReport>& reports, bool prime) {
  std::vector<double> out;
  for (const auto& r : reports) {
    const auto& m = prime ? r.merit_prime : r.merit;
    if (m) out.push_back(*m);
  }
  return out;
}

ojson welch_json(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) return nullptr;
  const WelchResult w = welch_test(a, b);
  return {{"mean_a", w.mean_a}, {"mean_b", w.mean_b}, {"n_a", w.n_a},
          {"n_b", w.n_b},       {"t", w.t},           {"dof", w.dof}};
}

int cmd_analyze(const std::vector<std::string>& paths, double burn_in, const std::string& out_path,
                const std::string& svg_prefix) {
  std::vector<std::vector<MeritReport>> sets;
  ojson files = ojson::array();
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw Failure{missing, "cannot open '" + p + "'"};
    try {
      sets.push_back(read_reports_jsonl(in));
    } catch (const std::exception& e) {
      throw Failure{bad_data, p + ": " + e.what()};
    }
    ojson s = to_json(summarize(sets.back(), burn_in));
    files.push_back({{"path", p}, {"summary", s}});
  }
  ojson comparisons = ojson::array();
  for (std::size_t i = 1; i < sets.size(); ++i) {
    comparisons.push_back({{"a", paths[0]},
                           {"b", paths[i]},
                           {"merit", welch_json(merits(sets[0], false), merits(sets[i], false))},
                           {"merit_prime", welch_json(merits(sets[0], true), merits(sets[i], true))}});
  }
  const ojson result = {{"lifetime_burn_in_s", burn_in}, {"files", files}, {"comparisons", comparisons}};
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    out << result.dump(2) << '\n';
  }
  std::cout << result.dump(2) << '\n';

  if (!svg_prefix.empty() && !sets.empty()) {
    const std::vector<std::string> colors = {"#1f4e9c", "#c0392b", "#27ae60", "#8e44ad"};
    auto plot = [&](const std::string& name, const std::string& title, auto pick, bool log_x) {
      std::vector<std::vector<std::size_t>> counts;
      std::vector<double> edges;
      for (const auto& set : sets) {
        const CampaignSummary s = summarize(set, burn_in);
        const Histogram& h = pick(s);
        edges = h.edges;
        counts.push_back(h.counts);
      }
      auto out = open_out(svg_prefix + name);
      svg::histogram(out, title, edges, counts, colors, log_x);
    };
    plot("_merit.svg", "M", [](const CampaignSummary& s) -> const Histogram& { return s.merit_histogram; }, true);
    plot("_merit_prime.svg", "M'", [](const CampaignSummary& s) -> const Histogram& { return s.merit_prime_histogram; }, true);
    plot("_dwell.svg", "dwell [s]", [](const CampaignSummary& s) -> const Histogram& { return s.dwell_histogram; }, false);
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasiclassical cavity QED atom-feedback simulator"};
  app.require_subcommand(1);
  unsigned jobs = 0;

  ConfigOptions tables_cfg, run_cfg, batch_cfg;
  std::string tables_out = "tables.csv";
  auto* tables = app.add_subcommand("tables", "Build the radial maps and calibrations");
  tables->add_option("--out", tables_out, "Maps CSV; the report goes to <out>.report.json")
      ->capture_default_str();
  tables->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
  tables_cfg.attach(tables);

  std::string tables_in = "tables.csv", run_prefix = "trajectory";
  std::uint64_t index = 0;
  bool plot = false;
  auto* run = app.add_subcommand("run", "Simulate one drop");
  run->add_option("--tables", tables_in, "Maps CSV from `tables`")->capture_default_str();
  run->add_option("--index", index, "Drop index within the campaign seed")->capture_default_str();
  run->add_option("--out", run_prefix, "Output prefix for .csv/.json/.svg")->capture_default_str();
  run->add_flag("--svg", plot, "Also write a static SVG plot");
  run_cfg.attach(run);

  std::string batch_prefix = "campaign";
  auto* batch = app.add_subcommand("batch", "Run a campaign of drops");
  batch->add_option("--tables", tables_in, "Maps CSV from `tables`")->capture_default_str();
  batch->add_option("--out", batch_prefix, "Output prefix for .jsonl/.summary.json")
      ->capture_default_str();
  batch->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
  batch_cfg.attach(batch);

  std::vector<std::string> inputs;
  double burn_in = 200e-6;
  std::string analyze_out, svg_prefix;
  auto* analyze = app.add_subcommand("analyze", "Summaries and closed/open comparison of campaigns");
  analyze->add_option("inputs", inputs, "Campaign JSONL files; the first is compared with the rest")
      ->required();
  analyze->add_option("--burn-in", burn_in, "Lifetime fit burn-in, s")->capture_default_str();
  analyze->add_option("--out", analyze_out, "Write the analysis JSON here");
  analyze->add_option("--svg", svg_prefix, "Prefix for histogram SVGs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*tables) return cmd_tables(tables_cfg.resolve(), tables_out, jobs);
    if (*run) return cmd_run(run_cfg.resolve(), tables_in, index, run_prefix, plot);
    if (*batch) return cmd_batch(batch_cfg.resolve(), tables_in, batch_prefix, jobs);
    if (*analyze) return cmd_analyze(inputs, burn_in, analyze_out, svg_prefix);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return solver;
  } catch (const MapError& e) {
    std::cerr << "map error: " << e.what() << '\n';
    return solver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bad_data;
  }
  return usage;
}
