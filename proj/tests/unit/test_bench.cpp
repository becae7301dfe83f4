#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "nd/bench/metrics.hpp"
#include "nd/bench/plan.hpp"
#include "nd/bench/records.hpp"
#include "nd/bench/report.hpp"
#include "nd/core/error.hpp"

using namespace nd;
using namespace nd::bench;
namespace fs = std::filesystem;

namespace {

const fs::path kBaseline = fs::path(ND_SOURCE_DIR) / "data" / "baseline" / "original_vs_reproduced.csv";

RunRecord make_record(const std::string& arch, nn::NormMode mode, std::size_t attempt, double acc, double secs) {
  RunRecord r;
  r.architecture = arch;
  r.dataset = "synthetic";
  r.mode = mode;
  r.epochs = 1;
  r.attempt = attempt;
  r.cell_id = arch + "/synthetic/" + std::string(nn::to_string(mode)) + "/e1/a" + std::to_string(attempt);
  r.seed = 1000 + attempt;
  r.final_test_accuracy = acc;
  r.train_seconds = secs;
  r.eval_seconds = 0.125;
  r.train_examples = 200;
  r.test_examples = 100;
  r.per_epoch.push_back({1, 1.5, 40.0, acc, secs, 0.125});
  return r;
}

std::vector<RunRecord> six_records() {
  std::vector<RunRecord> out;
  for (std::size_t a = 1; a <= 3; ++a) {
    out.push_back(make_record("vgg-mini", nn::NormMode::BatchNorm, a, 20.0 + 0.1 * static_cast<double>(a), 1.0 / 3.0 + a));
    out.push_back(make_record("vgg-mini", nn::NormMode::Deconv, a, 30.0 + 0.7 * static_cast<double>(a), 2.2 * static_cast<double>(a)));
  }
  return out;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("classify_value examples") {
  CHECK(classify_value(14.12, 14.38) == Classification::Better);
  CHECK(classify_value(21.89, 12.82) == Classification::WithinThreshold);
  CHECK(classify_value(19.03, 5.27) == Classification::Failed);
  for (double x : {0.0, 12.5, 99.9, 100.0}) CHECK(classify_value(x, x) == Classification::WithinThreshold);
  // The relative reading flips the 9.07-point case.
  CHECK(classify_value(21.89, 12.82, ThresholdMode::Relative) == Classification::Failed);
  CHECK(classify_value(50.0, 46.0, ThresholdMode::Relative) == Classification::WithinThreshold);
  CHECK_THROWS_AS(classify_value(-1.0, 5.0), DataError);
  CHECK_THROWS_AS(classify_value(50.0, 100.5), DataError);
  CHECK(color_of(Classification::Better) == "green");
  CHECK(parse_color("red") == Classification::Failed);
}

TEST_CASE("avg_sq_dev examples") {
  const std::vector<double> same = {55.0, 55.0, 55.0};
  CHECK(avg_sq_dev(55.0, same).value == 0.0);
  CHECK(avg_sq_dev(55.0, same).consistent);
  const std::vector<double> ones = {56.0, 54.0, 56.0};
  CHECK(avg_sq_dev(55.0, ones).value == 1.0);
  CHECK_FALSE(avg_sq_dev(55.0, ones).consistent);
  const std::vector<double> small = {55.3, 55.4, 54.8};
  CHECK(avg_sq_dev(55.0, small).value == doctest::Approx(0.29 / 3).epsilon(1e-9));
  CHECK(avg_sq_dev(55.0, small).consistent);
  CHECK_THROWS_AS(avg_sq_dev(55.0, {}), DataError);
}

TEST_CASE("time ratios") {
  CHECK(time_ratio(990.47, 3356.51) == doctest::Approx(3.39).epsilon(0.005));
  CHECK(time_ratio(550.25, 578.58) == doctest::Approx(1.05).epsilon(0.005));
  CHECK(time_ratio(12.0, 12.0) == 1.0);
  CHECK_THROWS_AS(time_ratio(0.0, 1.0), DataError);

  auto recs = six_records();
  const auto ratios = time_ratios(recs);
  REQUIRE(ratios.size() == 1);
  CHECK(ratios[0].ratio == doctest::Approx(4.4 / (1.0 / 3.0 + 2.0)));
  CHECK(ratios[0].deconv_seconds == doctest::Approx(4.4));
  CHECK(ratios[0].batchnorm_seconds == doctest::Approx(1.0 / 3.0 + 2.0));
  CHECK_FALSE(ratios[0].anomaly);

  recs.erase(std::remove_if(recs.begin(), recs.end(), [](const RunRecord& r) { return r.mode == nn::NormMode::Deconv; }),
             recs.end());
  CHECK_THROWS_AS(time_ratios(recs), DataError);

  auto fast = six_records();
  for (auto& r : fast)
    if (r.mode == nn::NormMode::Deconv) r.train_seconds = 0.01;
  CHECK(time_ratios(fast)[0].anomaly);
}

TEST_CASE("published training times span an overhead of 2% to 358%") {
  // Over the 100-epoch CIFAR-10 runs of every architecture in the baseline.
  const auto rows = load_baseline(kBaseline);
  std::map<std::string, std::pair<double, double>> times;
  for (const auto& r : rows) {
    if (r.metric != "train_seconds" || r.dataset != "cifar10" || r.epochs != 100) continue;
    REQUIRE(r.reproduced.has_value());
    (r.norm == "BN" ? times[r.architecture].first : times[r.architecture].second) = *r.reproduced;
  }
  REQUIRE(times.size() == 10);
  double lo = 1e9, hi = 0.0;
  for (const auto& [arch, t] : times) {
    const double ratio = time_ratio(t.first, t.second);
    CHECK(ratio > 1.0);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(std::lround((lo - 1.0) * 100) == 2);
  CHECK(std::lround((hi - 1.0) * 100) == 358);
  CHECK(time_ratio(times["VGG-16"].first, times["VGG-16"].second) == doctest::Approx(3.39).epsilon(0.005));
}

TEST_CASE("baseline fixture schema") {
  const auto rows = load_baseline(kBaseline);
  std::size_t acc = 0, secs = 0;
  for (const auto& r : rows) {
    acc += r.metric == "accuracy";
    secs += r.metric == "train_seconds";
  }
  CHECK(acc == 120);
  CHECK(secs == 120);
  CHECK_THROWS_AS(parse_baseline("source,row\nx,1\n"), FormatError);
  CHECK_THROWS_AS(parse_baseline("source,row,architecture,dataset,metric,norm,epochs,original,reproduced,color\n"
                                 "t,1,A,cifar10,accuracy,BN,one,1,2,green\n"),
                  FormatError);
}

TEST_CASE("baseline fidelity: one known mismatch under the points rule") {
  const auto fid = baseline_fidelity(load_baseline(kBaseline));
  CHECK(fid.size() == 120);
  std::vector<const FidelityRow*> mismatches;
  for (const auto& f : fid)
    if (!f.match()) mismatches.push_back(&f);
  // The only cell no threshold reading reproduces: an 8.25-point gap
  // published in red.
  REQUIRE(mismatches.size() == 1);
  CHECK(mismatches[0]->baseline.architecture == "ResNeXt-29");
  CHECK(mismatches[0]->baseline.dataset == "cifar100");
  CHECK(*mismatches[0]->baseline.original - *mismatches[0]->baseline.reproduced == doctest::Approx(8.25));
  // The relative reading is worse.
  std::size_t relative_hits = 0;
  for (const auto& f : baseline_fidelity(load_baseline(kBaseline), ThresholdMode::Relative)) relative_hits += f.match();
  CHECK(relative_hits < 119);
}

TEST_CASE("plan parsing") {
  const auto p = parse_plan(
      "# desk plan\n"
      "name = desk\n"
      "architecture = resnet-mini\n"
      "dataset = cifar100\n"
      "modes = bn, deconv\n"
      "epochs = 1, 20\n"
      "attempts = 2\n"
      "seed = 77\n"
      "learning_rate = 0.05\n"
      "sampling_stride = 2\n"
      "precision = f64\n"
      "augment = false\n");
  CHECK(p.name == "desk");
  CHECK(p.architecture == "resnet-mini");
  CHECK(p.modes == std::vector<nn::NormMode>{nn::NormMode::BatchNorm, nn::NormMode::Deconv});
  CHECK(p.epochs == std::vector<std::size_t>{1, 20});
  CHECK(p.base_seed == 77);
  CHECK(p.train.learning_rate == 0.05);
  CHECK(p.train.batch_size == 128);
  CHECK(p.deconv.sampling_stride == 2);
  CHECK(p.precision == Precision::F64);
  CHECK_FALSE(p.train.augment);
  CHECK(parse_plan(format_plan(p)).epochs == p.epochs);
  CHECK(format_plan(parse_plan(format_plan(p))) == format_plan(p));

  const auto d = parse_plan("");
  CHECK(d.attempts == 3);
  CHECK(d.train.learning_rate == 0.1);
  CHECK(d.deconv.sampling_stride == 3);
  CHECK(d.train_per_class == 500);

  CHECK_THROWS_AS(parse_plan("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("attempts = 1\nattempts = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("attempts = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("learning_rate = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("modes = batchnorm, magic\n"), ConfigError);
  CHECK_THROWS_AS(parse_plan("no equals sign\n"), ConfigError);
}

TEST_CASE("plan cells and seeds") {
  ExperimentPlan p;
  const auto cells = plan_cells(p);
  CHECK(cells.size() == 6);
  CHECK(cells[0].id(p) == "vgg-mini/cifar10/batchnorm/e1/a1");
  std::set<std::uint64_t> seeds;
  for (const auto& c : cells) seeds.insert(c.seed(p));
  CHECK(seeds.size() == 6);
  CHECK(cells[0].seed(p) == (p.base_seed ^ fnv1a64(cells[0].id(p))));
  ExperimentPlan q = p;
  q.base_seed = 2;
  CHECK(cells[0].seed(q) != cells[0].seed(p));
}

TEST_CASE("records: json round trip and write-once storage") {
  auto r = six_records()[1];
  r.manifest.kernel_path = "scalar";
  r.norm_mean = {0.1, 0.2, 0.3};
  r.norm_std = {1.0, 1.5, 2.0};
  const auto back = record_from_json(to_json(r));
  CHECK(to_json(back) == to_json(r));
  CHECK(back.final_test_accuracy == r.final_test_accuracy);
  CHECK(back.train_seconds == r.train_seconds);
  CHECK(back.seed == r.seed);
  CHECK_THROWS_AS(record_from_json("{not json"), FormatError);

  TempDir dir("nd_test_records");
  for (const auto& rec : six_records()) write_record(dir.path, rec);
  CHECK_THROWS(write_record(dir.path, six_records()[0]));
  CHECK(record_path(dir.path, "a/b/c").filename() == "a__b__c.json");
  const auto loaded = read_records(dir.path);
  REQUIRE(loaded.size() == 6);
  CHECK(std::is_sorted(loaded.begin(), loaded.end(),
                       [](const RunRecord& a, const RunRecord& b) { return a.cell_id < b.cell_id; }));

  RunRecord bad = r;
  bad.final_test_accuracy = 101.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = r;
  bad.train_seconds = 0.0;
  CHECK_THROWS_AS(bad.validate(), DataError);
}

TEST_CASE("report CSVs round-trip and are byte-stable") {
  auto recs = six_records();
  const auto csv = raw_csv(recs);
  const auto parsed = parse_raw_csv(csv);
  REQUIRE(parsed.size() == 6);
  std::vector<RawRow> expect;
  for (const auto& r : recs) expect.push_back(raw_row(r));
  std::sort(expect.begin(), expect.end(), [](const RawRow& a, const RawRow& b) { return a.cell_id < b.cell_id; });
  CHECK(parsed == expect);

  std::reverse(recs.begin(), recs.end());
  CHECK(raw_csv(recs) == csv);
  CHECK(plot_csv(recs) == plot_csv(six_records()));
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(42.0) == "42");
}

TEST_CASE("comparison against a baseline") {
  std::vector<RunRecord> recs = six_records();
  const auto base = load_baseline(kBaseline);
  const std::map<std::string, std::string> alias = {{"vgg-mini", "VGG-16"}};
  // No baseline rows for the synthetic dataset: originals stay empty.
  for (const auto& row : compare(recs, &base, ThresholdMode::Points, alias)) CHECK_FALSE(row.original.has_value());
  for (auto& r : recs) r.dataset = "cifar10";
  const auto rows = compare(recs, &base, ThresholdMode::Points, alias);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    REQUIRE(row.original.has_value());
    CHECK(row.attempts.size() == 3);
    CHECK(row.classification.has_value());
    CHECK(row.deviation.has_value());
  }
  // BN: original 14.12, attempts 20.1..20.3 -> better.
  CHECK(*rows[0].original == 14.12);
  CHECK(*rows[0].classification == Classification::Better);
  // ND: original 74.18, attempts ~30.7..32.1 -> failed.
  CHECK(*rows[1].classification == Classification::Failed);
}

TEST_CASE("emit_report writes the expected files") {
  TempDir dir("nd_test_report");
  const auto recs = six_records();
  const auto plain = emit_report(recs, nullptr, dir.path / "plain", ThresholdMode::Points);
  CHECK(fs::exists(plain.raw));
  CHECK(fs::exists(plain.plot));
  CHECK_FALSE(plain.comparison.has_value());
  CHECK(plain.time_ratio.has_value());
  const auto base = load_baseline(kBaseline);
  const auto with = emit_report(recs, &base, dir.path / "with", ThresholdMode::Points);
  REQUIRE(with.comparison.has_value());
  CHECK(fs::exists(*with.comparison));
}
