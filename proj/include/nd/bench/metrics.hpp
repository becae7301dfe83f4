#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nd/bench/records.hpp"

namespace nd::bench {

enum class Classification { Better, WithinThreshold, Failed };
// Points: original - reproduced <= threshold percentage points.
// Relative: (original - reproduced) / original <= threshold / 100.
enum class ThresholdMode { Points, Relative };

std::string_view to_string(Classification c) noexcept;
std::string_view to_string(ThresholdMode m) noexcept;
ThresholdMode parse_threshold_mode(std::string_view text);
// Table color names used by the baseline fixture.
std::string_view color_of(Classification c) noexcept;  // green, black, red
Classification parse_color(std::string_view color);

inline constexpr double kReproThreshold = 10.0;
inline constexpr double kConsistencyThreshold = 0.5;

// Both inputs are percentages in [0, 100] (DataError otherwise).
Classification classify_value(double original, double reproduced,
                              ThresholdMode mode = ThresholdMode::Points,
                              double threshold = kReproThreshold);

struct SquaredDeviation {
  double value = 0.0;
  bool consistent = false;  // value < 0.5
};

// Mean over attempts of (attempt - original)^2. Throws DataError when empty.
SquaredDeviation avg_sq_dev(double original, std::span<const double> attempts);

// nd / bn; both must be > 0.
double time_ratio(double batchnorm_seconds, double deconv_seconds);

struct TimeRatio {
  std::string architecture;
  std::string dataset;
  std::size_t epochs = 0;
  double batchnorm_seconds = 0.0;  // mean total train seconds over attempts
  double deconv_seconds = 0.0;
  double ratio = 0.0;
  bool anomaly = false;  // ratio < 1
};

// One entry per (architecture, dataset, epochs) group of successful records.
// Throws DataError when a group lacks either mode.
std::vector<TimeRatio> time_ratios(const std::vector<RunRecord>& records);

}  // namespace nd::bench
