// slamchar: adapt, characterize and analyze SLAM datasets.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slamchar/analysis.hpp"
#include "slamchar/config.hpp"
#include "slamchar/handler.hpp"
#include "slamchar/manifest.hpp"
#include "slamchar/report.hpp"
#include "slamchar/scoreboard.hpp"

namespace fs = std::filesystem;
using namespace slamchar;

namespace {

enum Exit : int { kOk = 0, kError = 1, kFindings = 2, kPartial = 3, kUsage = 64 };

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", path, "INI config file (default: $SDP_CONFIG)");
    cmd->add_option("--set", overrides, "Override a config key, e.g. --set stereo.d_max=64");
  }

  RunConfig load() const {
    RunConfig cfg;
    std::string file = path;
    if (file.empty()) {
      if (const char* env = std::getenv("SDP_CONFIG"); env && *env) file = env;
    }
    if (!file.empty()) cfg = load_config(file);
    for (const auto& o : overrides) apply_override(cfg, o);
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int report_findings(const std::vector<Finding>& findings) {
  for (const auto& f : findings) std::cerr << "finding: " << f.str() << '\n';
  return findings.empty() ? kOk : kFindings;
}

std::vector<Scoreboard> load_boards(const std::vector<std::string>& dirs) {
  if (dirs.empty()) throw Error("no scoreboards given");
  std::vector<Scoreboard> boards;
  for (const auto& d : dirs) boards.push_back(load_scoreboard(d));
  return boards;
}

AnalysisOptions analysis_options(const RunConfig& cfg, const std::vector<std::string>& coverage_metrics) {
  AnalysisOptions o;
  o.precision = cfg.precision;
  o.coverage_bins = static_cast<std::size_t>(cfg.coverage_bins);
  o.coverage_min_count = static_cast<std::size_t>(cfg.coverage_min_count);
  o.coverage_exact_limit = static_cast<std::size_t>(std::max(0, cfg.coverage_exact_limit));
  if (!coverage_metrics.empty()) o.coverage_metrics = coverage_metrics;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SLAM dataset characterization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // adapt
  auto* adapt = app.add_subcommand("adapt", "Build a manifest from a dataset directory");
  std::string adapt_type, adapt_root, adapt_out, adapt_name;
  adapt->add_option("type", adapt_type, "kitti | euroc | tumvi | asl")->required();
  adapt->add_option("root", adapt_root, "Dataset root directory")->required();
  adapt->add_option("-o,--output", adapt_out, "Manifest path")->required();
  adapt->add_option("--name", adapt_name, "Dataset name for the asl type");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a manifest against the files it references");
  std::string validate_manifest_path;
  validate->add_option("manifest", validate_manifest_path)->required();

  // characterize
  auto* characterize = app.add_subcommand("characterize", "Run processing elements over manifests");
  std::vector<std::string> char_manifests;
  std::string char_out, char_elements;
  unsigned char_threads = 1;
  bool char_quiet = false;
  ConfigArgs char_cfg;
  characterize->add_option("manifests", char_manifests, "Manifest files")->required();
  characterize->add_option("-o,--output", char_out, "Scoreboard directory")->required();
  characterize->add_option("--threads", char_threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  characterize->add_option("--elements", char_elements, "Comma-separated element ids (default: all)");
  characterize->add_flag("-q,--quiet", char_quiet, "No progress log");
  char_cfg.add_to(characterize);

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Export statistics, diversity, correlation and coverage");
  std::vector<std::string> an_boards, an_coverage;
  std::string an_out;
  ConfigArgs an_cfg;
  analyze_cmd->add_option("scoreboards", an_boards, "Scoreboard directories");
  analyze_cmd->add_option("-o,--output", an_out, "Output directory")->required();
  analyze_cmd->add_option("--coverage-metric", an_coverage, "Metric(s) for coverage analysis (default: blur.score)");
  an_cfg.add_to(analyze_cmd);

  // coverage
  auto* coverage_cmd = app.add_subcommand("coverage", "Minimal sequence subset covering a metric's histogram");
  std::vector<std::string> cov_boards;
  std::string cov_metric = "blur.score", cov_out;
  ConfigArgs cov_cfg;
  coverage_cmd->add_option("scoreboards", cov_boards, "Scoreboard directories");
  coverage_cmd->add_option("--metric", cov_metric, "Sample-level metric id");
  coverage_cmd->add_option("-o,--output", cov_out, "CSV path (default: standard output)");
  cov_cfg.add_to(coverage_cmd);

  // report
  auto* report_cmd = app.add_subcommand("report", "Plain-text statistics and diversity tables");
  std::vector<std::string> rep_boards;
  std::string rep_out;
  ConfigArgs rep_cfg;
  report_cmd->add_option("scoreboards", rep_boards, "Scoreboard directories");
  report_cmd->add_option("-o,--output", rep_out, "Report path (default: standard output)");
  rep_cfg.add_to(report_cmd);

  // config
  auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");
  ConfigArgs show_cfg;
  show_cfg.add_to(config_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*adapt) {
      DatasetManifest m;
      try {
        if (adapt_type == "kitti") {
          m = adapt_kitti(adapt_root);
        } else if (adapt_type == "euroc" || adapt_type == "tumvi") {
          m = adapt_asl(adapt_root, adapt_type);
        } else if (adapt_type == "asl") {
          m = adapt_asl(adapt_root, adapt_name.empty() ? "asl" : adapt_name);
        } else {
          std::cerr << "unknown dataset type: " << adapt_type << " (expected kitti, euroc, tumvi or asl)\n";
          return kUsage;
        }
      } catch (const ValidationError& e) {
        std::cerr << "finding: " << e.what() << '\n';
        return kFindings;
      }
      save_manifest(m, adapt_out);
      return report_findings(validate_manifest(m));
    }

    if (*validate) return report_findings(validate_manifest(load_manifest(validate_manifest_path)));

    if (*characterize) {
      const RunConfig cfg = char_cfg.load();
      RunOptions opts;
      opts.threads = char_threads;
      if (!char_elements.empty()) opts.elements = split_list(char_elements);
      if (!char_quiet) {
        opts.progress = [](const std::string& seq, const std::string& element, CellStatus status) {
          std::cerr << seq << ' ' << element << ' ' << to_string(status) << '\n';
        };
      }
      std::vector<Scoreboard> boards;
      std::vector<DatasetManifest> manifests;
      for (const auto& path : char_manifests) manifests.push_back(load_manifest(path));
      for (const auto& m : manifests) {
        const auto findings = validate_manifest(m);
        if (!findings.empty()) return report_findings(findings);
      }
      for (const auto& m : manifests) boards.push_back(run_characterization(m, cfg, opts));

      int code = kOk;
      const auto labels = dataset_labels(boards);
      for (std::size_t i = 0; i < boards.size(); ++i) {
        const fs::path dir = boards.size() == 1 ? fs::path(char_out) : fs::path(char_out) / labels[i];
        save_scoreboard(boards[i], dir);
        for (const auto* c : boards[i].failures()) {
          std::cerr << "failed: " << labels[i] << '/' << c->sequence << ' ' << c->element << ": " << c->error << '\n';
          code = kPartial;
        }
      }
      return code;
    }

    if (*analyze_cmd) {
      const RunConfig cfg = an_cfg.load();
      const auto boards = load_boards(an_boards);
      const auto result = analyze(boards, analysis_options(cfg, an_coverage));
      write_analysis(result, an_out);
      std::ofstream out(fs::path(an_out) / "report.txt", std::ios::binary);
      if (!out) throw Error("cannot write report");
      write_report(out, result);
      return kOk;
    }

    if (*coverage_cmd) {
      const RunConfig cfg = cov_cfg.load();
      const auto boards = load_boards(cov_boards);
      const auto c = coverage_analysis(boards, cov_metric, static_cast<std::size_t>(cfg.coverage_bins),
                                       static_cast<std::size_t>(cfg.coverage_min_count),
                                       static_cast<std::size_t>(std::max(0, cfg.coverage_exact_limit)));
      if (cov_out.empty()) {
        write_coverage_csv(std::cout, c);
      } else {
        std::ofstream out(cov_out, std::ios::binary);
        if (!out) throw Error("cannot write " + cov_out);
        write_coverage_csv(out, c);
      }
      return kOk;
    }

    if (*report_cmd) {
      const RunConfig cfg = rep_cfg.load();
      const auto boards = load_boards(rep_boards);
      const auto result = analyze(boards, analysis_options(cfg, {}));
      if (rep_out.empty()) {
        write_report(std::cout, result);
      } else {
        std::ofstream out(rep_out, std::ios::binary);
        if (!out) throw Error("cannot write " + rep_out);
        write_report(out, result);
      }
      return kOk;
    }

    if (*config_cmd) {
      for (const auto& [k, v] : config_entries(show_cfg.load())) std::cout << k << '=' << v << '\n';
      return kOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "finding: " << e.what() << '\n';
    return kFindings;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kUsage;
}
