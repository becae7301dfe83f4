#include "nd/bench/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

#include "nd/core/error.hpp"

namespace nd::bench {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <typename N>
N parse_num(const std::string& s, const std::string& where) {
  N v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw FormatError(where + ": '" + s + "' is not a number");
  }
  return v;
}

std::vector<std::vector<std::string>> read_table(const std::string& text,
                                                 const std::vector<std::string>& header,
                                                 const std::string& what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(what + ": empty file");
  if (split_csv_line(line) != header) throw FormatError(what + ": unexpected header '" + line + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw FormatError(what + " line " + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields, found " +
                        std::to_string(f.size()));
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

const std::vector<std::string> kBaselineHeader = {"source", "row", "architecture", "dataset",
                                                  "metric", "norm", "epochs", "original",
                                                  "reproduced", "color"};
const std::vector<std::string> kRawHeader = {
    "cell_id",  "architecture",        "dataset",       "mode",         "epochs",
    "attempt",  "seed",                "status",        "final_test_accuracy",
    "train_seconds", "eval_seconds",   "train_examples", "test_examples"};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw MissingFileError(p.string() + " not found");
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::trunc | std::ios::binary);
  if (!os) throw MissingFileError("cannot write " + p.string());
  os << text;
}

std::string norm_code(nn::NormMode m) {
  return m == nn::NormMode::BatchNorm ? "BN" : m == nn::NormMode::Deconv ? "ND" : "none";
}

}  // namespace

std::vector<BaselineRow> parse_baseline(const std::string& text) {
  std::vector<BaselineRow> out;
  for (const auto& f : read_table(text, kBaselineHeader, "baseline")) {
    BaselineRow r;
    r.source = f[0];
    r.row = parse_num<std::size_t>(f[1], "baseline row");
    r.architecture = f[2];
    r.dataset = f[3];
    r.metric = f[4];
    r.norm = f[5];
    r.epochs = parse_num<std::size_t>(f[6], "baseline epochs");
    if (!f[7].empty()) r.original = parse_num<double>(f[7], "baseline original");
    if (!f[8].empty()) r.reproduced = parse_num<double>(f[8], "baseline reproduced");
    r.color = f[9];
    if (r.metric != "accuracy" && r.metric != "train_seconds") {
      throw FormatError("baseline: unknown metric '" + r.metric + "'");
    }
    if (r.norm != "BN" && r.norm != "ND") throw FormatError("baseline: unknown norm '" + r.norm + "'");
    if (!r.color.empty()) parse_color(r.color);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<BaselineRow> load_baseline(const fs::path& path) { return parse_baseline(slurp(path)); }

std::vector<FidelityRow> baseline_fidelity(const std::vector<BaselineRow>& rows, ThresholdMode mode) {
  std::vector<FidelityRow> out;
  for (const auto& r : rows) {
    if (r.metric != "accuracy" || !r.original || !r.reproduced || r.color.empty()) continue;
    out.push_back({r, parse_color(r.color), classify_value(*r.original, *r.reproduced, mode)});
  }
  return out;
}

RawRow raw_row(const RunRecord& r) {
  return {r.cell_id,      r.architecture,        r.dataset,       std::string(nn::to_string(r.mode)),
          r.epochs,       r.attempt,             r.seed,          r.status,
          r.final_test_accuracy, r.train_seconds, r.eval_seconds, r.train_examples,
          r.test_examples};
}

std::string raw_csv(const std::vector<RunRecord>& records) {
  std::vector<RawRow> rows;
  for (const auto& r : records) rows.push_back(raw_row(r));
  std::sort(rows.begin(), rows.end(),
            [](const RawRow& a, const RawRow& b) { return a.cell_id < b.cell_id; });
  std::ostringstream os;
  for (std::size_t i = 0; i < kRawHeader.size(); ++i) os << (i ? "," : "") << kRawHeader[i];
  os << '\n';
  for (const auto& r : rows) {
    os << r.cell_id << ',' << r.architecture << ',' << r.dataset << ',' << r.mode << ','
       << r.epochs << ',' << r.attempt << ',' << r.seed << ',' << r.status << ','
       << format_number(r.final_test_accuracy) << ',' << format_number(r.train_seconds) << ','
       << format_number(r.eval_seconds) << ',' << r.train_examples << ',' << r.test_examples
       << '\n';
  }
  return os.str();
}

std::vector<RawRow> parse_raw_csv(const std::string& text) {
  std::vector<RawRow> out;
  for (const auto& f : read_table(text, kRawHeader, "raw csv")) {
    RawRow r;
    r.cell_id = f[0];
    r.architecture = f[1];
    r.dataset = f[2];
    r.mode = f[3];
    r.epochs = parse_num<std::size_t>(f[4], "epochs");
    r.attempt = parse_num<std::size_t>(f[5], "attempt");
    r.seed = parse_num<std::uint64_t>(f[6], "seed");
    r.status = f[7];
    r.final_test_accuracy = parse_num<double>(f[8], "final_test_accuracy");
    r.train_seconds = parse_num<double>(f[9], "train_seconds");
    r.eval_seconds = parse_num<double>(f[10], "eval_seconds");
    r.train_examples = parse_num<std::size_t>(f[11], "train_examples");
    r.test_examples = parse_num<std::size_t>(f[12], "test_examples");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ComparisonRow> compare(const std::vector<RunRecord>& records,
                                   const std::vector<BaselineRow>* baseline, ThresholdMode mode,
                                   const std::map<std::string, std::string>& arch_map) {
  using Key = std::tuple<std::string, std::string, int, std::size_t>;
  std::map<Key, ComparisonRow> groups;
  for (const auto* rp : by_cell_id(records)) {
    const auto& r = *rp;
    if (!r.ok()) continue;
    auto& g = groups[{r.architecture, r.dataset, static_cast<int>(r.mode), r.epochs}];
    g.architecture = r.architecture;
    g.dataset = r.dataset;
    g.mode = r.mode;
    g.epochs = r.epochs;
    g.attempts.push_back(r.final_test_accuracy);
  }
  std::vector<ComparisonRow> out;
  for (auto& [k, g] : groups) {
    double s = 0.0;
    for (double a : g.attempts) s += a;
    g.mean = s / static_cast<double>(g.attempts.size());
    if (baseline) {
      const auto it = arch_map.find(g.architecture);
      const std::string arch = it == arch_map.end() ? g.architecture : it->second;
      for (const auto& b : *baseline) {
        if (b.metric == "accuracy" && b.original && b.architecture == arch &&
            b.dataset == g.dataset && b.norm == norm_code(g.mode) && b.epochs == g.epochs) {
          g.original = *b.original;
          g.classification = classify_value(*b.original, g.mean, mode);
          g.deviation = avg_sq_dev(*b.original, g.attempts);
          break;
        }
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << "architecture,dataset,mode,epochs,attempt_accuracies,mean,original,classification,avg_sq_dev,"
        "consistent\n";
  for (const auto& r : rows) {
    os << r.architecture << ',' << r.dataset << ',' << nn::to_string(r.mode) << ',' << r.epochs
       << ',';
    for (std::size_t i = 0; i < r.attempts.size(); ++i) os << (i ? ";" : "") << format_number(r.attempts[i]);
    os << ',' << format_number(r.mean) << ',';
    if (r.original) os << format_number(*r.original);
    os << ',';
    if (r.classification) os << to_string(*r.classification);
    os << ',';
    if (r.deviation) os << format_number(r.deviation->value);
    os << ',';
    if (r.deviation) os << (r.deviation->consistent ? "true" : "false");
    os << '\n';
  }
  return os.str();
}

std::string plot_csv(const std::vector<RunRecord>& records) {
  const auto rows = compare(records, nullptr, ThresholdMode::Points, {});
  using Key = std::tuple<std::string, std::string, int, std::size_t>;
  std::map<Key, std::pair<double, std::size_t>> times;
  for (const auto* rp : by_cell_id(records)) {
    const auto& r = *rp;
    if (!r.ok()) continue;
    auto& t = times[{r.architecture, r.dataset, static_cast<int>(r.mode), r.epochs}];
    t.first += r.train_seconds;
    ++t.second;
  }
  std::ostringstream os;
  os << "series,architecture,dataset,mode,epochs,value\n";
  for (const auto& r : rows) {
    os << "accuracy_mean," << r.architecture << ',' << r.dataset << ',' << nn::to_string(r.mode)
       << ',' << r.epochs << ',' << format_number(r.mean) << '\n';
  }
  for (const auto& [k, t] : times) {
    const auto& [arch, ds, m, ep] = k;
    os << "train_seconds_mean," << arch << ',' << ds << ','
       << nn::to_string(static_cast<nn::NormMode>(m)) << ',' << ep << ','
       << format_number(t.first / static_cast<double>(t.second)) << '\n';
  }
  return os.str();
}

std::string time_ratio_csv(const std::vector<TimeRatio>& ratios) {
  std::ostringstream os;
  os << "architecture,dataset,epochs,batchnorm_seconds,deconv_seconds,ratio,anomaly\n";
  for (const auto& t : ratios) {
    os << t.architecture << ',' << t.dataset << ',' << t.epochs << ','
       << format_number(t.batchnorm_seconds) << ',' << format_number(t.deconv_seconds) << ','
       << format_number(t.ratio) << ',' << (t.anomaly ? "true" : "false") << '\n';
  }
  return os.str();
}

ReportFiles emit_report(const std::vector<RunRecord>& records,
                        const std::vector<BaselineRow>* baseline, const fs::path& out_dir,
                        ThresholdMode mode, const std::map<std::string, std::string>& arch_map) {
  if (records.empty()) throw DataError("report: no records");
  fs::create_directories(out_dir);
  ReportFiles files;
  files.raw = out_dir / "raw.csv";
  spit(files.raw, raw_csv(records));
  files.plot = out_dir / "plot.csv";
  spit(files.plot, plot_csv(records));
  if (baseline) {
    files.comparison = out_dir / "comparison.csv";
    spit(*files.comparison, comparison_csv(compare(records, baseline, mode, arch_map)));
  }
  try {
    const auto ratios = time_ratios(records);
    if (!ratios.empty()) {
      files.time_ratio = out_dir / "time_ratio.csv";
      spit(*files.time_ratio, time_ratio_csv(ratios));
      for (const auto& t : ratios) {
        if (t.anomaly) {
          files.notes.push_back("anomaly: deconv trained faster than batchnorm for " +
                                t.architecture + "/" + t.dataset + "/e" + std::to_string(t.epochs) +
                                " (ratio " + format_number(t.ratio) + ")");
        }
      }
    }
  } catch (const DataError& e) {
    files.notes.push_back(std::string("time ratios skipped: ") + e.what());
  }
  return files;
}

}  // namespace nd::bench
