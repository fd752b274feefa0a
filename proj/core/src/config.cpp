#include "dynaweight/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace dynaweight {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void check_keys(const json& obj, const char* where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* a) { return item.key() == a; });
    if (!known) fail("unknown key \"" + item.key() + "\" in " + where);
  }
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(std::string("missing required key \"") + key + "\"");
  return *it;
}

std::string get_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) fail(std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

int get_int(const json& obj, const char* key, int fallback, int min_value) {
  auto it = obj.find(key);
  int v = fallback;
  if (it != obj.end()) {
    if (!it->is_number_integer()) fail(std::string("\"") + key + "\" must be an integer");
    v = it->get<int>();
  }
  if (v < min_value) {
    fail(std::string("\"") + key + "\" must be >= " + std::to_string(min_value) + ", got " +
         std::to_string(v));
  }
  return v;
}

double get_positive(const json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  double v = fallback;
  if (it != obj.end()) {
    if (!it->is_number()) fail(std::string("\"") + key + "\" must be a number");
    v = it->get<double>();
  }
  if (!(v > 0.0)) fail(std::string("\"") + key + "\" must be positive");
  return v;
}

bool get_bool(const json& obj, const char* key, bool fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) fail(std::string("\"") + key + "\" must be a boolean");
  return it->get<bool>();
}

void check_path(const std::string& path, const char* key) {
  if (!std::filesystem::exists(path)) {
    fail(std::string("\"") + key + "\" path does not exist: " + path);
  }
}

std::vector<Scheme> parse_schemes(const std::string& name) {
  if (name == "all") {
    return {Scheme::Centralized, Scheme::FedAvg, Scheme::Simple, Scheme::Metropolis,
            Scheme::Dynaweight};
  }
  try {
    return {scheme_from_string(name)};
  } catch (const std::invalid_argument&) {
    fail("invalid \"scheme\" value \"" + name +
         "\" (valid: simple, metropolis, dynaweight, fedavg, centralized, all)");
  }
}

void parse_blobs(const json& obj, BlobsConfig& out) {
  check_keys(obj, "\"blobs\"",
             {"num_classes", "dim", "per_class", "test_per_class", "spread", "data_seed"});
  out.num_classes = get_int(obj, "num_classes", out.num_classes, 2);
  out.dim = get_int(obj, "dim", out.dim, 1);
  out.per_class = get_int(obj, "per_class", out.per_class, 1);
  out.test_per_class = get_int(obj, "test_per_class", out.test_per_class, 1);
  out.spread = get_positive(obj, "spread", out.spread);
  if (auto it = obj.find("data_seed"); it != obj.end()) {
    if (!it->is_number_unsigned() && !it->is_number_integer()) {
      fail("\"data_seed\" must be an integer");
    }
    out.data_seed = it->get<std::uint64_t>();
  }
}

void parse_mnist(const json& obj, MnistConfig& out) {
  check_keys(obj, "\"mnist\"", {"train_images", "train_labels", "test_images", "test_labels"});
  out.train_images = get_string(obj, "train_images");
  out.train_labels = get_string(obj, "train_labels");
  out.test_images = get_string(obj, "test_images");
  out.test_labels = get_string(obj, "test_labels");
  check_path(out.train_images, "train_images");
  check_path(out.train_labels, "train_labels");
  check_path(out.test_images, "test_images");
  check_path(out.test_labels, "test_labels");
}

void parse_partition(const json& obj, PartitionConfig& out) {
  check_keys(obj, "\"partition\"", {"kind", "minor_classes", "balanced_per_class"});
  std::string kind = obj.contains("kind") ? get_string(obj, "kind") : "heterogeneous";
  if (kind == "iid") {
    out.kind = PartitionKind::Iid;
  } else if (kind == "heterogeneous") {
    out.kind = PartitionKind::Heterogeneous;
  } else {
    fail("invalid partition \"kind\" value \"" + kind + "\" (valid: iid, heterogeneous)");
  }
  if (auto it = obj.find("minor_classes"); it != obj.end()) {
    if (it->is_number_integer()) {
      out.minor_lo = out.minor_hi = it->get<int>();
    } else if (it->is_array() && it->size() == 2 && (*it)[0].is_number_integer() &&
               (*it)[1].is_number_integer()) {
      out.minor_lo = (*it)[0].get<int>();
      out.minor_hi = (*it)[1].get<int>();
    } else {
      fail("\"minor_classes\" must be an integer or a [lo, hi] pair");
    }
    if (out.minor_lo < 1 || out.minor_hi < out.minor_lo) {
      fail("\"minor_classes\" range [" + std::to_string(out.minor_lo) + ", " +
           std::to_string(out.minor_hi) + "] is invalid");
    }
  }
  if (auto it = obj.find("balanced_per_class"); it != obj.end()) {
    if (!it->is_number_integer()) fail("\"balanced_per_class\" must be an integer");
    out.balanced_per_class = it->get<int>();
    if (out.balanced_per_class < 1) fail("\"balanced_per_class\" must be >= 1");
  }
}

void parse_model(const json& obj, ExperimentConfig& out) {
  check_keys(obj, "\"model\"", {"hidden_layers", "activation"});
  if (auto it = obj.find("hidden_layers"); it != obj.end()) {
    if (!it->is_array()) fail("\"hidden_layers\" must be an array of integers");
    out.hidden_layers.clear();
    for (const auto& v : *it) {
      if (!v.is_number_integer() || v.get<int>() < 1) {
        fail("\"hidden_layers\" entries must be positive integers");
      }
      out.hidden_layers.push_back(v.get<int>());
    }
  }
  if (obj.contains("activation")) {
    std::string name = get_string(obj, "activation");
    if (name == "tanh") {
      out.activation = Activation::Tanh;
    } else if (name == "relu") {
      out.activation = Activation::Relu;
    } else {
      fail("invalid \"activation\" value \"" + name + "\" (valid: tanh, relu)");
    }
  }
}

void parse_optimizer(const json& obj, OptimizerState& out) {
  check_keys(obj, "\"optimizer\"",
             {"kind", "base_lr", "schedule", "halve_every", "decay_start", "lr_floor"});
  if (obj.contains("kind")) {
    std::string kind = get_string(obj, "kind");
    if (kind == "adam") {
      out.kind = OptimizerKind::Adam;
    } else if (kind == "sgd") {
      out.kind = OptimizerKind::Sgd;
    } else {
      fail("invalid optimizer \"kind\" value \"" + kind + "\" (valid: adam, sgd)");
    }
  }
  out.base_lr = get_positive(obj, "base_lr", out.base_lr);
  if (obj.contains("schedule")) {
    std::string name = get_string(obj, "schedule");
    if (name == "constant") {
      out.schedule = LrSchedule::Constant;
    } else if (name == "halve_every_k") {
      out.schedule = LrSchedule::HalveEveryK;
    } else if (name == "exp_decay_to_floor") {
      out.schedule = LrSchedule::ExpDecayToFloor;
    } else if (name == "linear_decay") {
      out.schedule = LrSchedule::LinearDecay;
    } else {
      fail("invalid \"schedule\" value \"" + name +
           "\" (valid: constant, halve_every_k, exp_decay_to_floor, linear_decay)");
    }
  }
  out.halve_every = get_int(obj, "halve_every", out.halve_every, 1);
  out.decay_start = get_int(obj, "decay_start", out.decay_start, 0);
  out.lr_floor = get_positive(obj, "lr_floor", out.lr_floor);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("top level must be a JSON object");

  check_keys(root, "config",
             {"dataset", "blobs", "mnist", "topology", "n_servers", "scheme", "partition",
              "model", "optimizer", "epochs", "consensus_steps", "batch_size", "seeds",
              "output_dir", "track_weights", "checkpoint_every"});

  ExperimentConfig cfg;

  std::string dataset = get_string(root, "dataset");
  if (dataset == "blobs") {
    cfg.use_mnist = false;
  } else if (dataset == "mnist") {
    cfg.use_mnist = true;
  } else {
    fail("invalid \"dataset\" value \"" + dataset + "\" (valid: blobs, mnist)");
  }
  if (root.contains("blobs")) {
    if (cfg.use_mnist) fail("\"blobs\" section given but dataset is \"mnist\"");
    parse_blobs(root["blobs"], cfg.blobs);
  }
  if (cfg.use_mnist) {
    parse_mnist(require(root, "mnist"), cfg.mnist);
  } else if (root.contains("mnist")) {
    fail("\"mnist\" section given but dataset is \"blobs\"");
  }

  cfg.topology = get_string(root, "topology");
  static const char* kTopologies[] = {"ring", "line", "chordal", "exp"};
  if (std::find(std::begin(kTopologies), std::end(kTopologies), cfg.topology) ==
      std::end(kTopologies)) {
    fail("invalid \"topology\" value \"" + cfg.topology +
         "\" (valid: ring, line, chordal, exp)");
  }

  if (!root.contains("n_servers")) fail("missing required key \"n_servers\"");
  cfg.n_servers = get_int(root, "n_servers", 0, 1);

  cfg.schemes = parse_schemes(get_string(root, "scheme"));

  if (root.contains("partition")) parse_partition(root["partition"], cfg.partition);
  if (root.contains("model")) parse_model(root["model"], cfg);
  if (root.contains("optimizer")) parse_optimizer(root["optimizer"], cfg.optimizer);

  if (!root.contains("epochs")) fail("missing required key \"epochs\"");
  cfg.epochs = get_int(root, "epochs", 0, 1);
  cfg.optimizer.total_epochs = cfg.epochs;

  cfg.consensus_steps = get_int(root, "consensus_steps", cfg.n_servers <= 16 ? 1 : 2, 1);
  cfg.batch_size = get_int(root, "batch_size", 16, 1);

  if (auto it = root.find("seeds"); it != root.end()) {
    if (!it->is_array() || it->empty()) fail("\"seeds\" must be a non-empty array");
    cfg.seeds.clear();
    for (const auto& v : *it) {
      if (!v.is_number_unsigned() && !v.is_number_integer()) {
        fail("\"seeds\" entries must be integers");
      }
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }

  if (root.contains("output_dir")) cfg.output_dir = get_string(root, "output_dir");
  cfg.track_weights = get_bool(root, "track_weights", true);
  cfg.checkpoint_every = get_int(root, "checkpoint_every", 0, 0);

  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace dynaweight
