#include "nd/bench/plan.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "nd/core/error.hpp"
#include "nd/core/rng.hpp"

namespace nd::bench {

void ExperimentPlan::validate() const {
  if (attempts == 0) throw ConfigError("plan: attempts must be >= 1");
  if (modes.empty()) throw ConfigError("plan: modes must not be empty");
  if (epochs.empty()) throw ConfigError("plan: epochs must not be empty");
  for (auto e : epochs) {
    if (e == 0) throw ConfigError("plan: epochs must be >= 1");
  }
  if (train_per_class == 0 || test_per_class == 0) {
    throw ConfigError("plan: train_per_class and test_per_class must be >= 1");
  }
  if (dataset != "cifar10" && dataset != "cifar100" && dataset != "synthetic") {
    throw ConfigError("plan: unknown dataset '" + dataset + "'");
  }
  if (threads == 0) throw ConfigError("plan: threads must be >= 1");
  train.validate();
  deconv.validate();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename N>
N number(const std::string& key, const std::string& v) {
  N out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("plan: key '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("plan: key '" + key + "' expects true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

ExperimentPlan parse_plan(std::string_view text) {
  ExperimentPlan p;
  std::map<std::string, std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("plan line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string k = trim(std::string_view(t).substr(0, eq));
    const std::string v = trim(std::string_view(t).substr(eq + 1));
    if (!seen.emplace(k, v).second) {
      throw ConfigError("plan line " + std::to_string(lineno) + ": duplicate key '" + k + "'");
    }
    if (k == "name") p.name = v;
    else if (k == "architecture") p.architecture = v;
    else if (k == "dataset") p.dataset = v;
    else if (k == "train_per_class") p.train_per_class = number<std::size_t>(k, v);
    else if (k == "test_per_class") p.test_per_class = number<std::size_t>(k, v);
    else if (k == "image_size") p.image_size = number<std::size_t>(k, v);
    else if (k == "synthetic_signal") p.synthetic_signal = number<double>(k, v);
    else if (k == "modes") {
      p.modes.clear();
      for (const auto& m : split_list(v)) p.modes.push_back(nn::parse_norm_mode(m));
    } else if (k == "epochs") {
      p.epochs.clear();
      for (const auto& e : split_list(v)) p.epochs.push_back(number<std::size_t>(k, e));
    } else if (k == "attempts") p.attempts = number<std::size_t>(k, v);
    else if (k == "seed") p.base_seed = number<std::uint64_t>(k, v);
    else if (k == "base_width") p.base_width = number<std::size_t>(k, v);
    else if (k == "learning_rate") p.train.learning_rate = number<double>(k, v);
    else if (k == "batch_size") p.train.batch_size = number<std::size_t>(k, v);
    else if (k == "momentum") p.train.momentum = number<double>(k, v);
    else if (k == "weight_decay") p.train.weight_decay = number<double>(k, v);
    else if (k == "lr_schedule") p.train.lr_schedule = nn::parse_lr_schedule(v);
    else if (k == "augment") p.train.augment = boolean(k, v);
    else if (k == "block_size") p.deconv.block_size = number<std::size_t>(k, v);
    else if (k == "sampling_stride") p.deconv.sampling_stride = number<std::size_t>(k, v);
    else if (k == "deconv_epsilon") p.deconv.epsilon = number<double>(k, v);
    else if (k == "newton_iterations") p.deconv.newton_iterations = number<int>(k, v);
    else if (k == "running_momentum") p.deconv.running_momentum = number<double>(k, v);
    else if (k == "timed") p.timed = boolean(k, v);
    else if (k == "precision") p.precision = parse_precision(v);
    else if (k == "threads") p.threads = number<std::size_t>(k, v);
    else if (k == "output_dir") p.output_dir = v;
    else if (k == "data_dir") p.data_dir = v;
    else throw ConfigError("plan line " + std::to_string(lineno) + ": unknown key '" + k + "'");
  }
  p.validate();
  return p;
}

ExperimentPlan load_plan(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingFileError("plan file " + path.string() + " not found");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_plan(ss.str());
}

std::string format_plan(const ExperimentPlan& p) {
  std::ostringstream os;
  os << "name = " << p.name << '\n'
     << "architecture = " << p.architecture << '\n'
     << "dataset = " << p.dataset << '\n'
     << "train_per_class = " << p.train_per_class << '\n'
     << "test_per_class = " << p.test_per_class << '\n'
     << "image_size = " << p.image_size << '\n'
     << "synthetic_signal = " << fmt(p.synthetic_signal) << '\n'
     << "modes = ";
  for (std::size_t i = 0; i < p.modes.size(); ++i) os << (i ? ", " : "") << nn::to_string(p.modes[i]);
  os << "\nepochs = ";
  for (std::size_t i = 0; i < p.epochs.size(); ++i) os << (i ? ", " : "") << p.epochs[i];
  os << "\nattempts = " << p.attempts << '\n'
     << "seed = " << p.base_seed << '\n'
     << "base_width = " << p.base_width << '\n'
     << "learning_rate = " << fmt(p.train.learning_rate) << '\n'
     << "batch_size = " << p.train.batch_size << '\n'
     << "momentum = " << fmt(p.train.momentum) << '\n'
     << "weight_decay = " << fmt(p.train.weight_decay) << '\n'
     << "lr_schedule = " << nn::to_string(p.train.lr_schedule) << '\n'
     << "augment = " << (p.train.augment ? "true" : "false") << '\n'
     << "block_size = " << p.deconv.block_size << '\n'
     << "sampling_stride = " << p.deconv.sampling_stride << '\n'
     << "deconv_epsilon = " << fmt(p.deconv.epsilon) << '\n'
     << "newton_iterations = " << p.deconv.newton_iterations << '\n'
     << "running_momentum = " << fmt(p.deconv.running_momentum) << '\n'
     << "timed = " << (p.timed ? "true" : "false") << '\n'
     << "precision = " << to_string(p.precision) << '\n'
     << "threads = " << p.threads << '\n'
     << "output_dir = " << p.output_dir << '\n';
  if (!p.data_dir.empty()) os << "data_dir = " << p.data_dir << '\n';
  return os.str();
}

std::string Cell::id(const ExperimentPlan& plan) const {
  return plan.architecture + "/" + plan.dataset + "/" + std::string(nn::to_string(mode)) + "/e" +
         std::to_string(epochs) + "/a" + std::to_string(attempt);
}

std::uint64_t Cell::seed(const ExperimentPlan& plan) const {
  return plan.base_seed ^ fnv1a64(id(plan));
}

std::vector<Cell> plan_cells(const ExperimentPlan& plan) {
  std::vector<Cell> out;
  for (auto m : plan.modes) {
    for (auto e : plan.epochs) {
      for (std::size_t a = 1; a <= plan.attempts; ++a) out.push_back({m, e, a});
    }
  }
  return out;
}

std::uint64_t data_seed(const ExperimentPlan& plan) {
  return plan.base_seed ^ fnv1a64(plan.dataset + "/data");
}

}  // namespace nd::bench
