#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nd/core/execution.hpp"
#include "nd/nn/model.hpp"

namespace nd::bench {

struct EpochStat {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // percent, on augmented training batches
  double test_accuracy = 0.0;   // percent
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
};

// One training run of one plan cell. Written once, never modified.
struct RunRecord {
  std::string cell_id;
  std::string architecture;
  std::string dataset;
  nn::NormMode mode = nn::NormMode::BatchNorm;
  std::size_t epochs = 0;
  std::size_t attempt = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";  // "ok" or "failed"
  std::string error;          // diagnostics when failed
  double final_test_accuracy = 0.0;  // percent
  std::vector<EpochStat> per_epoch;
  double train_seconds = 0.0;  // training loop only
  double eval_seconds = 0.0;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  bool augment = false;
  std::vector<double> norm_mean;  // per-channel input normalization
  std::vector<double> norm_std;
  std::size_t deconv_warnings = 0;
  ExecutionManifest manifest;

  bool ok() const noexcept { return status == "ok"; }
  // Throws DataError when a field is out of its valid range.
  void validate() const;
};

std::string to_json(const RunRecord& r);
RunRecord record_from_json(const std::string& text);

// "<dir>/<cell id with '/' replaced by '__'>.json"
std::filesystem::path record_path(const std::filesystem::path& dir, const std::string& cell_id);

// Writes through a temporary file and a rename, so a crash never leaves a
// partial record. Refuses to overwrite an existing record.
void write_record(const std::filesystem::path& dir, const RunRecord& r);
// Every *.json record in `dir`, sorted by cell id.
std::vector<RunRecord> read_records(const std::filesystem::path& dir);

// Pointers to `records` sorted by cell id. Aggregates summed in this order do
// not depend on the input order.
std::vector<const RunRecord*> by_cell_id(const std::vector<RunRecord>& records);

}  // namespace nd::bench
