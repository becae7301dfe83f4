#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "nd/bench/plan.hpp"
#include "nd/bench/records.hpp"
#include "nd/data/dataset.hpp"

namespace nd::bench {

struct PreparedData {
  data::Dataset train;
  data::Dataset test;
  data::ChannelStats stats;  // computed on `train` before normalization
};

// Loads (or synthesizes) the plan's dataset, draws the stratified subsets with
// data_seed(plan) and normalizes both splits with the training statistics.
PreparedData prepare_data(const ExperimentPlan& plan);

// Trains and evaluates one cell. Divergence and numerical failures produce a
// record with status "failed" instead of throwing.
RunRecord run_cell(const ExperimentPlan& plan, const Cell& cell, const PreparedData& data);

struct RunOptions {
  std::ostream* log = nullptr;  // progress lines, optional
};

struct PlanResult {
  std::vector<RunRecord> records;  // every cell of the plan, in plan order
  std::size_t executed = 0;
  std::size_t skipped = 0;  // already on disk
  std::size_t failed = 0;
};

// Runs every cell whose record is not yet in `<output_dir>/records`, writing
// each record as soon as it completes. Installs the plan's execution mode.
PlanResult run_plan(const ExperimentPlan& plan, const RunOptions& options = {});

std::filesystem::path records_dir(const ExperimentPlan& plan);

}  // namespace nd::bench
