// ndbench: run batchnorm vs deconvolution experiment plans and report on them.
//
// Exit codes: 0 success, 1 usage error, 2 data verification failure,
// 3 at least one cell failed.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "nd/bench/metrics.hpp"
#include "nd/bench/plan.hpp"
#include "nd/bench/report.hpp"
#include "nd/bench/runner.hpp"
#include "nd/core/error.hpp"
#include "nd/data/cifar.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kDataFailure = 2;
constexpr int kCellFailed = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network deconvolution vs batch normalization benchmark harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Execute an experiment plan (resumes from existing records)");
  std::string plan_path, data_dir, out_dir, precision;
  std::size_t threads = 0;
  bool timed = false;
  run->add_option("--plan", plan_path, "Plan file (key = value)")->required()->check(CLI::ExistingFile);
  run->add_option("--data-dir", data_dir, "Directory with the CIFAR binary files");
  run->add_option("--out", out_dir, "Output directory (overrides the plan)");
  run->add_option("--threads", threads, "Kernel threads (overrides the plan)");
  run->add_flag("--timed", timed, "Mark the run as timing-bearing (cells run one at a time)");
  run->add_option("--precision", precision, "f32 (benchmark) or f64 (test mode)")
      ->check(CLI::IsMember({"f32", "f64"}));

  auto* report = app.add_subcommand("report", "Write CSV reports from run records");
  std::string records, baseline, threshold_mode = "points", report_out;
  std::vector<std::string> maps;
  report->add_option("--records", records, "Records directory")->required();
  report->add_option("--baseline", baseline, "Baseline CSV of original values");
  report->add_option("--threshold-mode", threshold_mode, "points or relative")
      ->check(CLI::IsMember({"points", "relative"}));
  report->add_option("--out", report_out, "Report directory (default: <records>/../report)");
  report->add_option("--map", maps, "Architecture alias for baseline matching, e.g. vgg-mini=VGG-16");

  auto* verify = app.add_subcommand("verify-data", "Check CIFAR files for presence, size and content");
  std::string dataset, dir;
  verify->add_option("--dataset", dataset, "cifar10 or cifar100")
      ->required()
      ->check(CLI::IsMember({"cifar10", "cifar100"}));
  verify->add_option("--dir", dir, "Dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run) {
      auto plan = nd::bench::load_plan(plan_path);
      if (!data_dir.empty()) plan.data_dir = data_dir;
      if (!out_dir.empty()) plan.output_dir = out_dir;
      if (threads > 0) plan.threads = threads;
      if (timed) plan.timed = true;
      if (!precision.empty()) plan.precision = nd::parse_precision(precision);
      plan.validate();
      nd::bench::RunOptions opts;
      opts.log = &std::cout;
      const auto result = nd::bench::run_plan(plan, opts);
      std::cout << result.executed << " executed, " << result.skipped << " resumed, "
                << result.failed << " failed\n";
      return result.failed > 0 ? kCellFailed : 0;
    }
    if (*report) {
      const std::filesystem::path rec_dir(records);
      const auto recs = nd::bench::read_records(rec_dir);
      if (recs.empty()) {
        std::cerr << "no records in " << records << '\n';
        return kUsage;
      }
      std::map<std::string, std::string> arch_map;
      for (const auto& m : maps) {
        const auto eq = m.find('=');
        if (eq == std::string::npos) {
          std::cerr << "--map expects name=alias, got " << m << '\n';
          return kUsage;
        }
        arch_map[m.substr(0, eq)] = m.substr(eq + 1);
      }
      std::vector<nd::bench::BaselineRow> base;
      if (!baseline.empty()) base = nd::bench::load_baseline(baseline);
      const auto out = report_out.empty() ? rec_dir.parent_path() / "report"
                                          : std::filesystem::path(report_out);
      const auto files = nd::bench::emit_report(
          recs, baseline.empty() ? nullptr : &base, out,
          nd::bench::parse_threshold_mode(threshold_mode), arch_map);
      std::cout << "wrote " << files.raw.string() << '\n' << "wrote " << files.plot.string() << '\n';
      if (files.comparison) std::cout << "wrote " << files.comparison->string() << '\n';
      if (files.time_ratio) std::cout << "wrote " << files.time_ratio->string() << '\n';
      for (const auto& n : files.notes) std::cout << n << '\n';
      return 0;
    }
    if (*verify) {
      const auto checks = nd::data::verify_cifar(nd::data::parse_cifar_kind(dataset), dir);
      bool ok = true;
      for (const auto& c : checks) {
        char digest[17];
        std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(c.fnv1a));
        std::cout << (c.ok() ? "ok      " : c.present ? "BADSIZE " : "MISSING ") << c.name
                  << "  expected " << c.expected_bytes << " bytes";
        if (c.present) std::cout << ", found " << c.actual_bytes;
        if (c.ok()) std::cout << ", fnv1a64 " << digest;
        std::cout << '\n';
        ok = ok && c.ok();
      }
      if (ok) {
        // Full decode also validates every label byte.
        const auto splits = nd::data::load_cifar(nd::data::parse_cifar_kind(dataset), dir);
        std::cout << splits.train.size() << " train / " << splits.test.size() << " test records\n";
      }
      return ok ? 0 : kDataFailure;
    }
  } catch (const nd::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const nd::MissingFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return *verify ? kDataFailure : kUsage;
  } catch (const nd::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return *verify || *run ? kDataFailure : kUsage;
  } catch (const nd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCellFailed;
  }
  return 0;
}
