#include "nd/bench/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nd/core/error.hpp"

namespace nd::bench {

namespace fs = std::filesystem;
using nlohmann::json;

void RunRecord::validate() const {
  auto pct = [&](double v, const char* what) {
    if (!(v >= 0.0 && v <= 100.0)) {
      throw DataError(cell_id + ": " + what + " " + std::to_string(v) + " outside [0, 100]");
    }
  };
  if (cell_id.empty()) throw DataError("record without a cell id");
  if (status != "ok" && status != "failed") throw DataError(cell_id + ": bad status " + status);
  if (!ok()) return;
  pct(final_test_accuracy, "final test accuracy");
  if (!(train_seconds > 0.0)) throw DataError(cell_id + ": train time must be > 0");
  for (const auto& e : per_epoch) {
    pct(e.train_accuracy, "train accuracy");
    pct(e.test_accuracy, "test accuracy");
  }
}

std::string to_json(const RunRecord& r) {
  json j;
  j["cell_id"] = r.cell_id;
  j["architecture"] = r.architecture;
  j["dataset"] = r.dataset;
  j["mode"] = std::string(nn::to_string(r.mode));
  j["epochs"] = r.epochs;
  j["attempt"] = r.attempt;
  j["seed"] = r.seed;
  j["status"] = r.status;
  j["error"] = r.error;
  j["final_test_accuracy"] = r.final_test_accuracy;
  j["train_seconds"] = r.train_seconds;
  j["eval_seconds"] = r.eval_seconds;
  j["train_examples"] = r.train_examples;
  j["test_examples"] = r.test_examples;
  j["augment"] = r.augment;
  j["norm_mean"] = r.norm_mean;
  j["norm_std"] = r.norm_std;
  j["deconv_warnings"] = r.deconv_warnings;
  json epochs = json::array();
  for (const auto& e : r.per_epoch) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"test_accuracy", e.test_accuracy},
                      {"train_seconds", e.train_seconds},
                      {"eval_seconds", e.eval_seconds}});
  }
  j["per_epoch"] = epochs;
  j["manifest"] = {{"precision", std::string(to_string(r.manifest.precision))},
                   {"threads", r.manifest.threads},
                   {"kernel_path", r.manifest.kernel_path},
                   {"build_info", r.manifest.build_info}};
  return j.dump(2) + "\n";
}

RunRecord record_from_json(const std::string& text) {
  RunRecord r;
  try {
    const json j = json::parse(text);
    r.cell_id = j.at("cell_id").get<std::string>();
    r.architecture = j.at("architecture").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.mode = nn::parse_norm_mode(j.at("mode").get<std::string>());
    r.epochs = j.at("epochs").get<std::size_t>();
    r.attempt = j.at("attempt").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.status = j.at("status").get<std::string>();
    r.error = j.value("error", std::string());
    r.final_test_accuracy = j.at("final_test_accuracy").get<double>();
    r.train_seconds = j.at("train_seconds").get<double>();
    r.eval_seconds = j.at("eval_seconds").get<double>();
    r.train_examples = j.value("train_examples", std::size_t{0});
    r.test_examples = j.value("test_examples", std::size_t{0});
    r.augment = j.value("augment", false);
    r.norm_mean = j.value("norm_mean", std::vector<double>{});
    r.norm_std = j.value("norm_std", std::vector<double>{});
    r.deconv_warnings = j.value("deconv_warnings", std::size_t{0});
    for (const auto& e : j.at("per_epoch")) {
      EpochStat s;
      s.epoch = e.at("epoch").get<std::size_t>();
      s.train_loss = e.at("train_loss").get<double>();
      s.train_accuracy = e.at("train_accuracy").get<double>();
      s.test_accuracy = e.at("test_accuracy").get<double>();
      s.train_seconds = e.at("train_seconds").get<double>();
      s.eval_seconds = e.at("eval_seconds").get<double>();
      r.per_epoch.push_back(s);
    }
    if (j.contains("manifest")) {
      const auto& m = j["manifest"];
      r.manifest.precision = parse_precision(m.at("precision").get<std::string>());
      r.manifest.threads = m.at("threads").get<std::size_t>();
      r.manifest.kernel_path = m.at("kernel_path").get<std::string>();
      r.manifest.build_info = m.at("build_info").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed run record: ") + e.what());
  }
  r.validate();
  return r;
}

fs::path record_path(const fs::path& dir, const std::string& cell_id) {
  std::string name = cell_id;
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] == '/') out += "__";
    else out += name[i];
  }
  return dir / (out + ".json");
}

void write_record(const fs::path& dir, const RunRecord& r) {
  r.validate();
  fs::create_directories(dir);
  const fs::path final_path = record_path(dir, r.cell_id);
  if (fs::exists(final_path)) throw StateError("record " + final_path.string() + " already exists");
  fs::path tmp = final_path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw MissingFileError("cannot write " + tmp.string());
    os << to_json(r);
    if (!os) throw FormatError("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, final_path);
}

std::vector<RunRecord> read_records(const fs::path& dir) {
  std::vector<RunRecord> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream is(entry.path());
    std::stringstream ss;
    ss << is.rdbuf();
    out.push_back(record_from_json(ss.str()));
  }
  std::sort(out.begin(), out.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.cell_id < b.cell_id; });
  return out;
}

std::vector<const RunRecord*> by_cell_id(const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(),
                   [](const RunRecord* a, const RunRecord* b) { return a->cell_id < b->cell_id; });
  return out;
}

}  // namespace nd::bench
