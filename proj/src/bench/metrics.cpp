#include "nd/bench/metrics.hpp"

#include <map>
#include <tuple>

#include "nd/core/error.hpp"

namespace nd::bench {

std::string_view to_string(Classification c) noexcept {
  switch (c) {
    case Classification::Better: return "better";
    case Classification::WithinThreshold: return "within_threshold";
    case Classification::Failed: return "failed";
  }
  return "unknown";
}

std::string_view to_string(ThresholdMode m) noexcept {
  return m == ThresholdMode::Points ? "points" : "relative";
}

ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "points") return ThresholdMode::Points;
  if (text == "relative") return ThresholdMode::Relative;
  throw ConfigError("unknown threshold mode '" + std::string(text) + "'");
}

std::string_view color_of(Classification c) noexcept {
  switch (c) {
    case Classification::Better: return "green";
    case Classification::WithinThreshold: return "black";
    case Classification::Failed: return "red";
  }
  return "unknown";
}

Classification parse_color(std::string_view color) {
  if (color == "green") return Classification::Better;
  if (color == "black") return Classification::WithinThreshold;
  if (color == "red") return Classification::Failed;
  throw FormatError("unknown color '" + std::string(color) + "'");
}

Classification classify_value(double original, double reproduced, ThresholdMode mode,
                              double threshold) {
  auto check = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 100.0)) {
      throw DataError(std::string(what) + " " + std::to_string(v) + " outside [0, 100]");
    }
  };
  check(original, "original value");
  check(reproduced, "reproduced value");
  if (reproduced > original) return Classification::Better;
  const double gap = original - reproduced;
  const bool within = mode == ThresholdMode::Points
                          ? gap <= threshold
                          : (original == 0.0 || gap / original <= threshold / 100.0);
  return within ? Classification::WithinThreshold : Classification::Failed;
}

SquaredDeviation avg_sq_dev(double original, std::span<const double> attempts) {
  if (attempts.empty()) throw DataError("avg_sq_dev: no attempts");
  double s = 0.0;
  for (double a : attempts) s += (a - original) * (a - original);
  SquaredDeviation r;
  r.value = s / static_cast<double>(attempts.size());
  r.consistent = r.value < kConsistencyThreshold;
  return r;
}

double time_ratio(double batchnorm_seconds, double deconv_seconds) {
  if (!(batchnorm_seconds > 0.0) || !(deconv_seconds > 0.0)) {
    throw DataError("time_ratio: times must be > 0");
  }
  return deconv_seconds / batchnorm_seconds;
}

std::vector<TimeRatio> time_ratios(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, std::string, std::size_t>;
  struct Acc {
    double bn = 0.0, nd = 0.0;
    std::size_t nbn = 0, nnd = 0;
  };
  std::map<Key, Acc> groups;
  for (const auto* rp : by_cell_id(records)) {
    const auto& r = *rp;
    if (!r.ok()) continue;
    auto& a = groups[{r.architecture, r.dataset, r.epochs}];
    if (r.mode == nn::NormMode::BatchNorm) {
      a.bn += r.train_seconds;
      ++a.nbn;
    } else if (r.mode == nn::NormMode::Deconv) {
      a.nd += r.train_seconds;
      ++a.nnd;
    }
  }
  std::vector<TimeRatio> out;
  for (const auto& [k, a] : groups) {
    const auto& [arch, ds, ep] = k;
    if (a.nbn == 0 || a.nnd == 0) {
      throw DataError("time_ratio: " + arch + "/" + ds + "/e" + std::to_string(ep) +
                      " lacks a " + (a.nbn == 0 ? "batchnorm" : "deconv") + " counterpart");
    }
    TimeRatio t;
    t.architecture = arch;
    t.dataset = ds;
    t.epochs = ep;
    t.batchnorm_seconds = a.bn / static_cast<double>(a.nbn);
    t.deconv_seconds = a.nd / static_cast<double>(a.nnd);
    t.ratio = time_ratio(t.batchnorm_seconds, t.deconv_seconds);
    t.anomaly = t.ratio < 1.0;
    out.push_back(t);
  }
  return out;
}

}  // namespace nd::bench
