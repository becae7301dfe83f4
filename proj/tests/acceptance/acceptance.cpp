// Acceptance suite. `nd_acceptance <n>` checks criterion n, prints one line
// "criterion <n> <PASS|FAIL|SKIP>: <detail>" and exits 0, 1 or 77.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "nd/bench/metrics.hpp"
#include "nd/bench/plan.hpp"
#include "nd/bench/records.hpp"
#include "nd/bench/report.hpp"
#include "nd/bench/runner.hpp"
#include "nd/core/error.hpp"
#include "nd/core/execution.hpp"
#include "nd/core/rng.hpp"
#include "nd/data/cifar.hpp"
#include "nd/nn/layers.hpp"
#include "nd/whitening/whitening.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace nd;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass_if(bool ok, const std::string& detail) { return {ok ? Verdict::Pass : Verdict::Fail, detail}; }

const fs::path kSource = ND_SOURCE_DIR;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// Appends the runtime and fails the outcome when it exceeds the budget.
Outcome with_budget(Outcome o, double elapsed, double budget) {
  o.detail += "; runtime " + fmt(elapsed, 3) + " s (budget " + fmt(budget, 3) + " s)";
  if (o.verdict == Verdict::Pass && elapsed >= budget) o.verdict = Verdict::Fail;
  return o;
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

// 1. Decorrelated random data has near-identity covariance.
Outcome whitening_property() {
  configure_execution(Precision::F64, 1);
  const std::size_t n = 1000, d = 27;
  Rng rng(2024);
  // Gaussian rows with an AR(1) correlation of 0.5 between neighbouring columns.
  auto x = randn<double>({n, d}, rng);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 1; c < d; ++c) x(r, c) = 0.5 * x(r, c - 1) + std::sqrt(0.75) * x(r, c);
  const double before = testing::distance_from_identity(whitening::covariance(x, 0.0).cov) / static_cast<double>(d);

  const auto stats = whitening::covariance_relative(x, 1e-5);
  const auto eig = whitening::inverse_sqrt_eigen_oracle(stats);
  const auto newton = whitening::inverse_sqrt_newton(stats.cov, 5);
  const auto dist = [&](const Tensor<double>& dm) {
    const auto white = whitening::apply_decorrelation(x, stats.mean, dm);
    return testing::distance_from_identity(whitening::covariance(white, 0.0).cov) / static_cast<double>(d);
  };
  const double e = dist(eig.d), nw = dist(newton.d);
  return pass_if(e <= 0.05 && nw <= 0.1, "||cov - I||_F / d: input " + fmt(before) + ", eigen " + fmt(e) +
                                             " (<= 0.05), newton-5 " + fmt(nw) + " (<= 0.1)");
}

// 2. Newton iteration agrees with the eigendecomposition oracle.
Outcome newton_oracle_agreement() {
  configure_execution(Precision::F64, 1);
  Rng rng(77);
  std::size_t count = 0, bad = 0;
  double worst = 0.0, worst_cond = 0.0;
  std::size_t worst_d = 0;
  for (std::size_t d : {4, 27, 64}) {
    for (int i = 0; i < 34; ++i) {
      // log-uniform condition number in [1, 1e4]
      const double cond = std::pow(10.0, 4.0 * rng.uniform());
      const auto a = testing::random_spd(d, cond, rng);
      const auto oracle = whitening::inverse_sqrt_eigen_oracle(a).d;
      const auto newton = whitening::inverse_sqrt_newton(a, 15).d;
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        num += (newton[k] - oracle[k]) * (newton[k] - oracle[k]);
        den += oracle[k] * oracle[k];
      }
      const double rel = std::sqrt(num / den);
      ++count;
      if (!(rel <= 1e-4)) ++bad;
      if (!(rel <= worst)) {
        worst = rel;
        worst_cond = cond;
        worst_d = d;
      }
    }
  }
  return pass_if(bad == 0, std::to_string(count) + " matrices, " + std::to_string(bad) +
                               " above 1e-4; worst relative error " + fmt(worst) + " (d " +
                               std::to_string(worst_d) + ", cond " + fmt(worst_cond, 3) + ")");
}

// 3. The im2col convolution layer equals the direct loop over every small geometry.
Outcome conv_equivalence() {
  configure_execution(Precision::F64, 1);
  Rng rng(3);
  std::size_t checked = 0, rejected = 0, bad = 0, unrejected = 0;
  double worst = 0.0;
  for (std::size_t h = 1; h <= 8; ++h)
    for (std::size_t w = 1; w <= 8; ++w)
      for (std::size_t k = 1; k <= 3; ++k)
        for (std::size_t stride = 1; stride <= 3; ++stride)
          for (std::size_t pad = 0; pad <= 2; ++pad)
            for (std::size_t cin : {1, 3})
              for (std::size_t cout : {1, 2}) {
                const bool fits = h + 2 * pad >= k && w + 2 * pad >= k;
                const bool integral = fits && (h + 2 * pad - k) % stride == 0 && (w + 2 * pad - k) % stride == 0;
                const bool bias = (h + w) % 2 == 0;
                nn::Conv2d<double> conv(cin, cout, k, stride, pad, bias);
                testing::fill_normal(conv.weight().value, rng);
                if (bias) testing::fill_normal(conv.bias()->value, rng);
                const auto x = randn<double>({2, cin, h, w}, rng);
                if (!integral) {
                  try {
                    conv.forward(x, nn::Mode::Eval);
                    ++unrejected;
                  } catch (const GeometryError&) {
                    ++rejected;
                  }
                  continue;
                }
                const auto y = conv.forward(x, nn::Mode::Eval);
                const auto ref = testing::direct_conv(x, conv.weight().value, bias ? &conv.bias()->value : nullptr,
                                                      stride, pad);
                const double diff = max_abs_diff(y, ref);
                worst = std::max(worst, diff);
                bad += !(diff <= 1e-12);
                ++checked;
              }
  return pass_if(bad == 0 && unrejected == 0,
                 std::to_string(checked) + " geometries, worst |diff| " + fmt(worst) + " (<= 1e-12), " +
                     std::to_string(bad) + " over; " + std::to_string(rejected) +
                     " non-integral geometries rejected, " + std::to_string(unrejected) + " accepted");
}

// 4. Finite-difference gradient checks for every layer kind.
Outcome gradient_checks() {
  configure_execution(Precision::F64, 1);
  const auto results = testing::all_gradient_checks();
  std::size_t failed = 0, coords = 0;
  double worst = 0.0;
  std::string failures;
  for (const auto& r : results) {
    coords += r.checked;
    worst = std::max(worst, r.worst_relative);
    if (!r.passed()) {
      ++failed;
      failures += " [" + r.name + ": " + r.worst_where + "]";
    }
  }
  return pass_if(failed == 0 && !results.empty(),
                 std::to_string(results.size()) + " checks over " + std::to_string(coords) +
                     " coordinates, worst relative error " + fmt(worst) + " (<= 1e-3)" + failures);
}

// Desk-scale plan with data and output locations filled in, or nullopt without data.
std::optional<bench::ExperimentPlan> desk_plan() {
  const char* dir = env("ND_CIFAR10_DIR");
  if (!dir) return std::nullopt;
  auto plan = bench::load_plan(kSource / "plans" / "desk-cifar10.plan");
  plan.data_dir = dir;
  const char* out = env("ND_ACCEPTANCE_OUT");
  plan.output_dir = (fs::path(out ? out : "acceptance_runs") / "desk-cifar10").string();
  plan.validate();
  return plan;
}

// Runs (or resumes) the desk plan; the records are shared by criteria 5 and 6.
std::vector<bench::RunRecord> desk_records(const bench::ExperimentPlan& plan) {
  const auto result = bench::run_plan(plan, {&std::cerr});
  return result.records;
}

double mean_accuracy(const std::vector<bench::RunRecord>& recs, nn::NormMode mode, std::size_t& n) {
  double s = 0.0;
  n = 0;
  for (const auto& r : recs)
    if (r.ok() && r.mode == mode) {
      s += r.final_test_accuracy;
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

// 5. Deconvolution beats batch normalization after one epoch at desk scale.
Outcome desk_trend() {
  const auto plan = desk_plan();
  if (!plan) return {Verdict::Skip, "ND_CIFAR10_DIR not set; CIFAR-10 binaries are required"};
  const auto recs = desk_records(*plan);
  std::size_t nbn = 0, nnd = 0;
  const double bn = mean_accuracy(recs, nn::NormMode::BatchNorm, nbn);
  const double nd = mean_accuracy(recs, nn::NormMode::Deconv, nnd);
  const bool complete = nbn == plan->attempts && nnd == plan->attempts;
  return pass_if(complete && nd - bn >= 5.0, "mean test accuracy batchnorm " + fmt(bn) + "% (" +
                                                 std::to_string(nbn) + " runs), deconv " + fmt(nd) + "% (" +
                                                 std::to_string(nnd) + " runs), gap " + fmt(nd - bn) +
                                                 " points (>= 5)");
}

// 6. Deconvolution training time overhead lies in (1, 6].
Outcome desk_overhead() {
  const auto plan = desk_plan();
  if (!plan) return {Verdict::Skip, "ND_CIFAR10_DIR not set; CIFAR-10 binaries are required"};
  const auto recs = desk_records(*plan);
  const auto ratios = bench::time_ratios(recs);
  if (ratios.size() != 1) return {Verdict::Fail, "expected one ratio group, got " + std::to_string(ratios.size())};
  const auto& t = ratios.front();
  return pass_if(t.ratio > 1.0 && t.ratio <= 6.0, "deconv / batchnorm train time " + fmt(t.deconv_seconds) + " s / " +
                                                      fmt(t.batchnorm_seconds) + " s = " + fmt(t.ratio) +
                                                      " (in (1, 6])");
}

// 7. Threshold classification reproduces every baseline cell color.
Outcome metric_fidelity() {
  const auto rows = bench::load_baseline(kSource / "data" / "baseline" / "original_vs_reproduced.csv");
  const auto fid = bench::baseline_fidelity(rows);
  std::size_t hits = 0;
  std::string misses;
  for (const auto& f : fid) {
    if (f.match()) {
      ++hits;
    } else {
      const auto& b = f.baseline;
      misses += " [" + b.architecture + " " + b.dataset + " " + b.norm + " e" + std::to_string(b.epochs) + ": " +
                fmt(*b.original) + " vs " + fmt(*b.reproduced) + " published " + b.color + ", computed " +
                std::string(bench::color_of(f.computed)) + "]";
    }
  }
  const std::vector<double> zero = {55.0, 55.0, 55.0}, one = {56.0, 54.0, 56.0}, small = {55.3, 55.4, 54.8};
  const auto d0 = bench::avg_sq_dev(55.0, zero), d1 = bench::avg_sq_dev(55.0, one),
             d2 = bench::avg_sq_dev(55.0, small);
  const bool hand = d0.value == 0.0 && d0.consistent && d1.value == 1.0 && !d1.consistent &&
                    std::abs(d2.value - 0.0967) < 5e-5 && d2.consistent;
  return pass_if(hits == fid.size() && fid.size() == 120 && hand,
                 std::to_string(hits) + "/" + std::to_string(fid.size()) + " cells match" + misses +
                     "; avg_sq_dev hand cases " + (hand ? "pass" : "FAIL") + " (" + fmt(d0.value) + ", " +
                     fmt(d1.value) + ", " + fmt(d2.value) + ")");
}

// 8. The desk plan rerun in test mode is bit-identical.
Outcome determinism() {
  auto plan = desk_plan();
  if (!plan) return {Verdict::Skip, "ND_CIFAR10_DIR not set; CIFAR-10 binaries are required"};
  plan->precision = Precision::F64;
  const fs::path base = fs::path(plan->output_dir).parent_path() / "determinism";
  std::vector<std::vector<bench::RunRecord>> runs;
  for (const char* leg : {"a", "b"}) {
    auto p = *plan;
    p.output_dir = (base / leg).string();
    fs::remove_all(p.output_dir);
    runs.push_back(bench::run_plan(p, {&std::cerr}).records);
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < runs[0].size() && i < runs[1].size(); ++i) {
    const auto& a = runs[0][i];
    const auto& b = runs[1][i];
    bool eq = a.cell_id == b.cell_id && a.final_test_accuracy == b.final_test_accuracy &&
              a.per_epoch.size() == b.per_epoch.size();
    for (std::size_t e = 0; eq && e < a.per_epoch.size(); ++e)
      eq = a.per_epoch[e].test_accuracy == b.per_epoch[e].test_accuracy &&
           a.per_epoch[e].train_accuracy == b.per_epoch[e].train_accuracy &&
           a.per_epoch[e].train_loss == b.per_epoch[e].train_loss;
    same += eq;
  }
  const bool ok = runs[0].size() == runs[1].size() && same == runs[0].size() && !runs[0].empty();
  return pass_if(ok, std::to_string(same) + "/" + std::to_string(runs[0].size()) +
                         " cells bit-identical across two f64 runs");
}

// 9. CIFAR decoding is exact on the fixtures and, when present, the official files.
Outcome loader_exactness() {
  const fs::path fixtures = kSource / "tests" / "fixtures";
  std::size_t wrong = 0;
  const auto check_fixture = [&](data::CifarKind kind, const char* file, std::vector<int> labels) {
    const auto ds = data::read_cifar_file(fixtures / file, kind, data::Split::Train, 2);
    wrong += ds.labels != labels;
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t i = 0; i < data::kCifarPixels; ++i) {
        const auto byte = r == 0 ? (i * 7 + 1) % 256 : 255 - i % 256;
        wrong += ds.images[r * data::kCifarPixels + i] != static_cast<float>(byte) / 255.0f;
      }
  };
  check_fixture(data::CifarKind::Cifar10, "cifar10_two_records.bin", {3, 9});
  check_fixture(data::CifarKind::Cifar100, "cifar100_two_records.bin", {42, 99});
  std::string detail = "fixtures: " + std::to_string(wrong) + " wrong values";
  bool ok = wrong == 0;

  std::size_t official = 0;
  for (auto [kind, var] : {std::pair{data::CifarKind::Cifar10, "ND_CIFAR10_DIR"},
                           std::pair{data::CifarKind::Cifar100, "ND_CIFAR100_DIR"}}) {
    const char* dir = env(var);
    if (!dir) continue;
    ++official;
    const auto splits = data::load_cifar(kind, dir);
    const std::size_t classes = data::class_count(kind);
    const auto htrain = data::class_histogram(splits.train), htest = data::class_histogram(splits.test);
    const bool sizes = splits.train.size() == 50000 && splits.test.size() == 10000;
    const bool hist = htrain.size() == classes && htest.size() == classes &&
                      std::all_of(htrain.begin(), htrain.end(), [&](std::size_t c) { return c == 50000 / classes; }) &&
                      std::all_of(htest.begin(), htest.end(), [&](std::size_t c) { return c == 10000 / classes; });
    ok = ok && sizes && hist;
    detail += "; " + std::string(data::to_string(kind)) + " " + std::to_string(splits.train.size()) + "/" +
              std::to_string(splits.test.size()) + (hist ? " with exact histograms" : " with WRONG histograms");
  }
  if (official == 0) detail += "; no official files present (ND_CIFAR10_DIR and ND_CIFAR100_DIR unset)";
  return pass_if(ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: nd_acceptance <criterion 1-9>\n";
    return 2;
  }
  const int n = std::atoi(argv[1]);
  struct Entry {
    std::function<Outcome()> run;
    double budget;  // seconds, 0 for none
  };
  const std::vector<Entry> table = {
      {whitening_property, 1.0}, {newton_oracle_agreement, 10.0}, {conv_equivalence, 30.0},
      {gradient_checks, 60.0},   {desk_trend, 0.0},               {desk_overhead, 0.0},
      {metric_fidelity, 1.0},    {determinism, 0.0},              {loader_exactness, 10.0},
  };
  if (n < 1 || n > static_cast<int>(table.size())) {
    std::cerr << "unknown criterion " << argv[1] << '\n';
    return 2;
  }
  Outcome o{Verdict::Fail, ""};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    o = table[static_cast<std::size_t>(n - 1)].run();
  } catch (const std::exception& e) {
    o = {Verdict::Fail, std::string("error: ") + e.what()};
  }
  if (table[static_cast<std::size_t>(n - 1)].budget > 0.0 && o.verdict != Verdict::Skip)
    o = with_budget(o, seconds_since(t0), table[static_cast<std::size_t>(n - 1)].budget);
  const char* word = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
  std::cout << "criterion " << n << ' ' << word << ": " << o.detail << std::endl;
  return o.verdict == Verdict::Pass ? 0 : o.verdict == Verdict::Fail ? 1 : 77;
}
