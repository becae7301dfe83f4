#include "nd/bench/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "nd/core/error.hpp"
#include "nd/data/cifar.hpp"
#include "nd/data/synth.hpp"
#include "nd/nn/deconv.hpp"
#include "nd/nn/train.hpp"

namespace nd::bench {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

fs::path records_dir(const ExperimentPlan& plan) { return fs::path(plan.output_dir) / "records"; }

PreparedData prepare_data(const ExperimentPlan& plan) {
  Rng rng(data_seed(plan));
  data::Dataset train_full, test_full;
  if (plan.dataset == "synthetic") {
    data::SynthOptions o;
    o.side = plan.image_size;
    o.classes = 10;
    o.signal = plan.synthetic_signal;
    Rng gen = rng.split(1);
    train_full = data::synth_dataset(data::SynthKind::CorrelatedChannels, plan.train_per_class * 10,
                                     gen, o);
    o.split = data::Split::Test;
    test_full = data::synth_dataset(data::SynthKind::CorrelatedChannels, plan.test_per_class * 10,
                                    gen, o);
  } else {
    if (plan.data_dir.empty()) throw MissingFileError("plan has no data_dir for " + plan.dataset);
    auto splits = data::load_cifar(data::parse_cifar_kind(plan.dataset), plan.data_dir);
    train_full = std::move(splits.train);
    test_full = std::move(splits.test);
  }
  Rng pick = rng.split(2);
  PreparedData d;
  d.train = data::subset(train_full, plan.train_per_class, pick);
  d.test = data::subset(test_full, plan.test_per_class, pick);
  d.stats = data::channel_stats(d.train);
  data::normalize(d.train, d.stats);
  data::normalize(d.test, d.stats);
  return d;
}

namespace {

template <typename T>
std::size_t count_warnings(nn::Model<T>& model) {
  std::size_t n = 0;
  std::function<void(nn::Layer<T>&)> visit = [&](nn::Layer<T>& l) {
    if (auto* d = dynamic_cast<nn::Deconv<T>*>(&l)) n += d->convergence_warnings();
    for (auto* c : l.children()) visit(*c);
  };
  for (auto& l : model.layers()) visit(*l);
  return n;
}

template <typename T>
double evaluate(nn::Model<T>& model, const data::Dataset& ds) {
  constexpr std::size_t kEvalBatch = 500;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < ds.size(); b += kEvalBatch) {
    const auto batch = data::slice<T>(ds, b, std::min(ds.size(), b + kEvalBatch));
    const auto pred = nn::argmax_rows(nn::predict(model, batch.images));
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i];
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(ds.size());
}

template <typename T>
void train_cell(const ExperimentPlan& plan, const Cell& cell, const PreparedData& data,
                RunRecord& rec) {
  Rng rng(rec.seed);
  nn::ModelSpec spec;
  spec.architecture = plan.architecture;
  spec.norm_mode = cell.mode;
  spec.class_count = data.train.class_count;
  spec.base_width = plan.base_width;
  spec.input_channels = data.train.images.dim(1);
  spec.input_size = data.train.images.dim(2);
  spec.deconv = plan.deconv;
  Rng init = rng.split(0);
  nn::Model<T> model = nn::build_model<T>(spec, init);
  nn::Sgd<T> opt({plan.train.momentum, plan.train.weight_decay});

  nn::TrainConfig tc = plan.train;
  tc.epochs = cell.epochs;
  const std::size_t per_epoch =
      (data.train.size() + tc.batch_size - 1) / tc.batch_size;
  const std::size_t total = per_epoch * tc.epochs;
  std::size_t step = 0;
  try {
    for (std::size_t e = 1; e <= tc.epochs; ++e) {
      data::BatchStream<T> stream(data.train, tc.batch_size, rng.split(e), tc.augment);
      data::Batch<T> batch;
      double loss = 0.0;
      std::size_t correct = 0, seen = 0;
      const auto t0 = Clock::now();
      while (stream.next(batch)) {
        const auto r = nn::train_step(model, opt, batch.images, batch.labels,
                                      nn::scheduled_lr(tc, step++, total));
        loss += r.loss * static_cast<double>(r.count);
        correct += r.correct;
        seen += r.count;
      }
      const auto t1 = Clock::now();
      const double acc = evaluate(model, data.test);
      const auto t2 = Clock::now();
      EpochStat s;
      s.epoch = e;
      s.train_loss = loss / static_cast<double>(seen);
      s.train_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(seen);
      s.test_accuracy = acc;
      s.train_seconds = std::chrono::duration<double>(t1 - t0).count();
      s.eval_seconds = std::chrono::duration<double>(t2 - t1).count();
      rec.per_epoch.push_back(s);
      rec.train_seconds += s.train_seconds;
      rec.eval_seconds += s.eval_seconds;
      rec.final_test_accuracy = acc;
    }
  } catch (const DivergenceError& e) {
    rec.status = "failed";
    rec.error = std::string("divergence at step ") + std::to_string(step) + ": " + e.what();
  } catch (const NumericalDomainError& e) {
    rec.status = "failed";
    rec.error = std::string("numerical failure at step ") + std::to_string(step) + ": " + e.what();
  }
  rec.deconv_warnings = count_warnings(model);
}

}  // namespace

RunRecord run_cell(const ExperimentPlan& plan, const Cell& cell, const PreparedData& data) {
  RunRecord rec;
  rec.cell_id = cell.id(plan);
  rec.architecture = plan.architecture;
  rec.dataset = plan.dataset;
  rec.mode = cell.mode;
  rec.epochs = cell.epochs;
  rec.attempt = cell.attempt;
  rec.seed = cell.seed(plan);
  rec.train_examples = data.train.size();
  rec.test_examples = data.test.size();
  rec.augment = plan.train.augment;
  rec.norm_mean = data.stats.mean;
  rec.norm_std = data.stats.stddev;
  rec.manifest = configure_execution(plan.precision, plan.threads);
  if (plan.precision == Precision::F64) {
    train_cell<double>(plan, cell, data, rec);
  } else {
    train_cell<float>(plan, cell, data, rec);
  }
  return rec;
}

PlanResult run_plan(const ExperimentPlan& plan, const RunOptions& options) {
  plan.validate();
  const fs::path dir = records_dir(plan);
  PlanResult result;
  std::optional<PreparedData> data;
  for (const Cell& cell : plan_cells(plan)) {
    const std::string id = cell.id(plan);
    const fs::path path = record_path(dir, id);
    if (fs::exists(path)) {
      std::ifstream is(path);
      std::stringstream ss;
      ss << is.rdbuf();
      result.records.push_back(record_from_json(ss.str()));
      ++result.skipped;
      if (options.log) *options.log << "skip " << id << " (record exists)\n";
      continue;
    }
    if (!data) data = prepare_data(plan);
    RunRecord rec = run_cell(plan, cell, *data);
    write_record(dir, rec);
    ++result.executed;
    if (options.log) {
      *options.log << (rec.ok() ? "done " : "FAILED ") << id << "  acc "
                   << rec.final_test_accuracy << "%  train " << rec.train_seconds << " s"
                   << (rec.ok() ? "" : "  " + rec.error) << '\n';
    }
    result.records.push_back(std::move(rec));
  }
  for (const auto& r : result.records) result.failed += r.ok() ? 0 : 1;
  return result;
}

}  // namespace nd::bench
