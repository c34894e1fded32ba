#include "biotrom/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace biotrom {

namespace {

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a number");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': '" + v + "' is not an integer");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a boolean");
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

void flatten(const YAML::Node& node, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (node.IsMap()) {
    for (const auto& kv : node) {
      const std::string k = kv.first.as<std::string>();
      flatten(kv.second, prefix.empty() ? k : prefix + "." + k, out);
    }
  } else if (node.IsScalar()) {
    out.emplace_back(prefix, node.as<std::string>());
  } else if (!node.IsNull()) {
    throw std::invalid_argument("config key '" + prefix + "': sequences are not supported");
  }
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data, std::uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PipelineConfig PipelineConfig::profile_defaults(const std::string& profile) {
  PipelineConfig c;
  c.profile = profile;
  if (profile == "desk") {
    c.mesh = {20, 0};
    c.num_train = 25;
    c.final_time = 1000.0;
    c.train.epochs = 2000;
  } else if (profile == "paper") {
    c.mesh = {30, 285};
    c.num_train = 100;
    c.final_time = 4000.0;
    c.train.epochs = 20000;
  } else {
    throw std::invalid_argument("unknown profile '" + profile + "' (expected desk or paper)");
  }
  return c;
}

void PipelineConfig::set(const std::string& key, const std::string& v) {
  static const std::map<std::string, std::function<void(PipelineConfig&, const std::string&, const std::string&)>>
      setters = {
          {"case", [](auto& c, auto& k, auto& v) { c.case_id = static_cast<int>(to_long(k, v)); }},
          {"profile", [](auto& c, auto&, auto& v) { c.profile = v; }},
          {"mesh.n_x", [](auto& c, auto& k, auto& v) { c.mesh.n_x = static_cast<int>(to_long(k, v)); }},
          {"mesh.crossed", [](auto& c, auto& k, auto& v) { c.mesh.crossed_squares = static_cast<int>(to_long(k, v)); }},
          {"time.dt0", [](auto& c, auto& k, auto& v) { c.dt0 = to_double(k, v); }},
          {"time.dt_mult", [](auto& c, auto& k, auto& v) { c.dt_mult = to_double(k, v); }},
          {"time.dt_max", [](auto& c, auto& k, auto& v) { c.dt_max = to_double(k, v); }},
          {"time.final", [](auto& c, auto& k, auto& v) { c.final_time = to_double(k, v); }},
          {"fom.beta", [](auto& c, auto& k, auto& v) { c.fom.beta = to_double(k, v); }},
          {"fom.tol_fs", [](auto& c, auto& k, auto& v) { c.fom.tol_fs = to_double(k, v); }},
          {"fom.max_iter", [](auto& c, auto& k, auto& v) { c.fom.max_iter = static_cast<int>(to_long(k, v)); }},
          {"sampling.m", [](auto& c, auto& k, auto& v) { c.num_train = static_cast<int>(to_long(k, v)); }},
          {"pod.variant",
           [](auto& c, auto& k, auto& v) {
             if (v != "standard" && v != "nested") throw std::invalid_argument("config key '" + k + "': expected standard or nested");
             c.pod_variant = v;
           }},
          {"pod.n_int", [](auto& c, auto& k, auto& v) { c.n_int = (v == "inf") ? 0 : static_cast<int>(to_long(k, v)); }},
          {"pod.n", [](auto& c, auto& k, auto& v) { c.n_modes = static_cast<int>(to_long(k, v)); }},
          {"pod.inner_product", [](auto& c, auto&, auto& v) { c.inner_product = parse_inner_product(v); }},
          {"net.n_hl", [](auto& c, auto& k, auto& v) { c.n_hidden_layers = static_cast<int>(to_long(k, v)); }},
          {"net.n_nn", [](auto& c, auto& k, auto& v) { c.n_neurons = static_cast<int>(to_long(k, v)); }},
          {"net.epochs", [](auto& c, auto& k, auto& v) { c.train.epochs = static_cast<int>(to_long(k, v)); }},
          {"net.batch", [](auto& c, auto& k, auto& v) { c.train.batch_size = static_cast<int>(to_long(k, v)); }},
          {"net.lr", [](auto& c, auto& k, auto& v) { c.train.learning_rate = to_double(k, v); }},
          {"net.validation", [](auto& c, auto& k, auto& v) { c.train.validation_fraction = to_double(k, v); }},
          {"net.activation", [](auto& c, auto&, auto& v) { c.activation = parse_activation(v); }},
          {"seed", [](auto& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_long(k, v)); }},
          {"field.file", [](auto& c, auto&, auto& v) { c.field_file = v; }},
          {"field.seed", [](auto& c, auto& k, auto& v) { c.field_seed = static_cast<std::uint64_t>(to_long(k, v)); }},
          {"out", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
          {"serial", [](auto& c, auto& k, auto& v) { c.serial = to_bool(k, v); }},
          {"workers", [](auto& c, auto& k, auto& v) { c.workers = static_cast<int>(to_long(k, v)); }},
      };
  const auto it = setters.find(key);
  if (it == setters.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  it->second(*this, key, v);
}

void PipelineConfig::load_yaml(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot read config " + path.string() + ": " + e.what());
  }
  std::vector<std::pair<std::string, std::string>> kv;
  flatten(root, "", kv);
  // A profile key resets the defaults before the other keys apply.
  for (const auto& [k, v] : kv)
    if (k == "profile") *this = profile_defaults(v);
  for (const auto& [k, v] : kv)
    if (k != "profile") set(k, v);
}

std::map<std::string, std::string> PipelineConfig::to_map() const {
  return {
      {"case", std::to_string(case_id)},
      {"mesh.n_x", std::to_string(mesh.n_x)},
      {"mesh.crossed", std::to_string(mesh.crossed_squares)},
      {"time.dt0", fmt_double(dt0)},
      {"time.dt_mult", fmt_double(dt_mult)},
      {"time.dt_max", fmt_double(dt_max)},
      {"time.final", fmt_double(final_time)},
      {"fom.beta", fmt_double(fom.beta)},
      {"fom.tol_fs", fmt_double(fom.tol_fs)},
      {"fom.max_iter", std::to_string(fom.max_iter)},
      {"sampling.m", std::to_string(num_train)},
      {"pod.variant", pod_variant},
      {"pod.n_int", n_int == 0 ? "inf" : std::to_string(n_int)},
      {"pod.n", std::to_string(n_modes)},
      {"pod.inner_product", to_string(inner_product)},
      {"net.n_hl", std::to_string(n_hidden_layers)},
      {"net.n_nn", std::to_string(n_neurons)},
      {"net.epochs", std::to_string(train.epochs)},
      {"net.batch", std::to_string(train.batch_size)},
      {"net.lr", fmt_double(train.learning_rate)},
      {"net.validation", fmt_double(train.validation_fraction)},
      {"net.activation", activation == Activation::Tanh ? "tanh" : "relu"},
      {"seed", std::to_string(seed)},
      {"field.file", field_file},
      {"field.seed", std::to_string(field_seed)},
  };
}

std::uint64_t PipelineConfig::fom_hash() const {
  static const char* keys[] = {"case",      "mesh.n_x",   "mesh.crossed", "time.dt0", "time.dt_mult", "time.dt_max",
                               "time.final", "fom.beta",  "fom.tol_fs",   "fom.max_iter"};
  const auto m = to_map();
  std::string canon;
  for (const char* k : keys) canon += std::string(k) + "=" + m.at(k) + "\n";
  if (case_id == 4) {
    if (!field_file.empty()) {
      std::ifstream in(field_file, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      canon += "field.content=" + hex_hash(fnv1a64(ss.str())) + "\n";
    } else {
      canon += "field.seed=" + m.at("field.seed") + "\n";
    }
  }
  return fnv1a64(canon);
}

std::uint64_t PipelineConfig::config_hash() const {
  std::string canon;
  for (const auto& [k, v] : to_map()) canon += k + "=" + v + "\n";
  return fnv1a64(canon, fom_hash());
}

int PipelineConfig::resolved_workers() const {
  if (serial) return 1;
  if (workers > 0) return workers;
  if (const char* env = std::getenv("BIOTROM_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

}  // namespace biotrom
