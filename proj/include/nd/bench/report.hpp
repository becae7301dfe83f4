#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nd/bench/metrics.hpp"
#include "nd/bench/records.hpp"

namespace nd::bench {

// One row of the baseline fixture (data/baseline/original_vs_reproduced.csv).
// Columns: source,row,architecture,dataset,metric,norm,epochs,original,
// reproduced,color. norm is BN or ND; original and color may be empty.
struct BaselineRow {
  std::string source;
  std::size_t row = 0;
  std::string architecture;
  std::string dataset;
  std::string metric;  // "accuracy" or "train_seconds"
  std::string norm;    // "BN" or "ND"
  std::size_t epochs = 0;
  std::optional<double> original;
  std::optional<double> reproduced;
  std::string color;
};

// Throws FormatError when the header or a field does not match the schema.
std::vector<BaselineRow> parse_baseline(const std::string& text);
std::vector<BaselineRow> load_baseline(const std::filesystem::path& path);

struct FidelityRow {
  BaselineRow baseline;
  Classification expected;
  Classification computed;
  bool match() const noexcept { return expected == computed; }
};

// classify_value over every accuracy row that has original, reproduced and color.
std::vector<FidelityRow> baseline_fidelity(const std::vector<BaselineRow>& rows,
                                           ThresholdMode mode = ThresholdMode::Points);

// Raw per-cell table.
struct RawRow {
  std::string cell_id;
  std::string architecture;
  std::string dataset;
  std::string mode;
  std::size_t epochs = 0;
  std::size_t attempt = 0;
  std::uint64_t seed = 0;
  std::string status;
  double final_test_accuracy = 0.0;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;

  friend bool operator==(const RawRow&, const RawRow&) = default;
};

RawRow raw_row(const RunRecord& r);
std::string raw_csv(const std::vector<RunRecord>& records);
std::vector<RawRow> parse_raw_csv(const std::string& text);

struct ComparisonRow {
  std::string architecture;  // as in the records
  std::string dataset;
  nn::NormMode mode;
  std::size_t epochs = 0;
  std::vector<double> attempts;
  double mean = 0.0;
  std::optional<double> original;
  std::optional<Classification> classification;
  std::optional<SquaredDeviation> deviation;
};

// Groups successful records by (architecture, dataset, mode, epochs) and, when
// a baseline is given, attaches the matching original value. `arch_map` maps
// record architecture names to baseline names (e.g. vgg-mini -> VGG-16).
std::vector<ComparisonRow> compare(const std::vector<RunRecord>& records,
                                   const std::vector<BaselineRow>* baseline, ThresholdMode mode,
                                   const std::map<std::string, std::string>& arch_map);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);
// series,architecture,dataset,mode,epochs,value with series accuracy_mean and
// train_seconds_mean.
std::string plot_csv(const std::vector<RunRecord>& records);
std::string time_ratio_csv(const std::vector<TimeRatio>& ratios);

struct ReportFiles {
  std::filesystem::path raw;
  std::optional<std::filesystem::path> comparison;
  std::filesystem::path plot;
  std::optional<std::filesystem::path> time_ratio;
  std::vector<std::string> notes;
};

// Writes raw.csv, plot.csv, comparison.csv (with a baseline) and
// time_ratio.csv (when both modes are present) into out_dir.
ReportFiles emit_report(const std::vector<RunRecord>& records,
                        const std::vector<BaselineRow>* baseline,
                        const std::filesystem::path& out_dir, ThresholdMode mode,
                        const std::map<std::string, std::string>& arch_map = {});

// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace nd::bench
