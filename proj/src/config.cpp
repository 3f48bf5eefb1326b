#include "bdw/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "bdw/rng.hpp"

namespace bdw {
namespace {

using nlohmann::json;

json default_attack_json() {
  return json{{"family", "nes"},
              {"targeted", false},
              {"target_rule", "next_class"},
              {"budget", 20000},
              {"epsilon", 0.0},  // 0 = family default
              {"lambda", 1.0},
              {"pop", 0},  // 0 = family default
              {"seed", 5},
              {"nes_step", 0.02},
              {"nes_radius", 0.01},
              {"eps_source", 0.01},
              {"mut_prob", 0.1},
              {"mut_range", 0.1},
              {"elite", 2}};
}

std::string type_name(const json& v) {
  if (v.is_boolean()) return "bool";
  if (v.is_number_integer()) return "int";
  if (v.is_number()) return "real";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "object";
  return "null";
}

void merge_into(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) {
    throw std::invalid_argument("config: expected an object at '" +
                                (path.empty() ? std::string("<root>") : path) +
                                "'");
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string p = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key()))
      throw std::invalid_argument("config: unknown key '" + p + "'");
    json& slot = base[it.key()];
    const json& val = it.value();
    if (slot.is_object()) {
      merge_into(slot, val, p);
      continue;
    }
    const bool compatible =
        (slot.is_array() && val.is_array()) ||
        (slot.is_string() && val.is_string()) ||
        (slot.is_boolean() && val.is_boolean()) ||
        (slot.is_number() && val.is_number() && !val.is_boolean());
    if (!compatible) {
      throw std::invalid_argument("config: key '" + p + "' expects " +
                                  type_name(slot) + ", got " + type_name(val));
    }
    slot = val;
  }
}

void schema_lines(const json& node, const std::string& path,
                  std::ostringstream& out) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string p = path.empty() ? it.key() : path + "." + it.key();
    if (it.value().is_object()) {
      schema_lines(it.value(), p, out);
    } else {
      out << "  " << p << " (" << type_name(it.value())
          << ", default: " << it.value().dump() << ")\n";
    }
  }
}

}  // namespace

json default_config_json() {
  json j;
  j["seed"] = 1234;  // master seed for per-run seed derivation
  j["jobs"] = 0;     // 0 = auto (logical core count)
  j["data"] = {{"classes", 10},   {"dim", 16},      {"spread", 0.08},
               {"per_class", 200}, {"seed", 1},      {"train_csv", ""},
               {"test_csv", ""}};
  j["model"] = {{"kind", "mlp"}, {"path", ""}, {"epochs", 40},
                {"lr", 0.05},    {"seed", 2}};
  j["defense"] = {{"theta", 0.0}, {"sigma", 0.0}, {"seed", 0}, {"mode", "auto"}};
  j["grid"] = {{"thetas", json::array({0.0, 0.5, 0.7})},
               {"sigmas", json::array({0.0, 0.1})}};
  j["attack"] = default_attack_json();
  j["attacks"] = json::array();
  j["eval"] = {{"n_samples", 50}};
  j["thresholds"] = json::array();
  return j;
}

json resolve_config(const json& user) {
  json base = default_config_json();
  merge_into(base, user, "");
  // Each attacks[] element follows the attack schema.
  json normalized = json::array();
  for (std::size_t i = 0; i < base["attacks"].size(); ++i) {
    json a = default_attack_json();
    merge_into(a, base["attacks"][i], "attacks[" + std::to_string(i) + "]");
    normalized.push_back(std::move(a));
  }
  base["attacks"] = std::move(normalized);
  return base;
}

void apply_override(json& config, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("--set expects key.path=value, got '" +
                                assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings are taken verbatim
  }
  json* node = &config;
  std::size_t start = 0;
  std::string leaf;
  std::vector<std::string> parts;
  while (true) {
    const std::size_t dot = key.find('.', start);
    parts.push_back(key.substr(start, dot == std::string::npos
                                          ? std::string::npos
                                          : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (node->is_array()) {
      throw std::invalid_argument(
          "--set cannot address array elements ('" + key +
          "'); assign the whole array as JSON instead");
    }
    if (!node->contains(parts[i]))
      throw std::invalid_argument("--set: unknown config key '" + key + "'");
    node = &(*node)[parts[i]];
  }
  leaf = parts.back();
  if (node->is_array()) {
    throw std::invalid_argument("--set cannot address array elements ('" + key +
                                "'); assign the whole array as JSON instead");
  }
  if (!node->is_object() || !node->contains(leaf))
    throw std::invalid_argument("--set: unknown config key '" + key + "'");
  json patch;
  json* cursor = &patch;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    (*cursor)[parts[i]] = json::object();
    cursor = &(*cursor)[parts[i]];
  }
  (*cursor)[leaf] = value;
  merge_into(config, patch, "");  // reuses the schema/type validation
}

std::string config_hash(const json& resolved) {
  const std::string dump = resolved.dump();
  std::uint64_t h = 0x9E3779B97F4A7C15ull;
  for (unsigned char c : dump) h = hash_mix(h, c);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string config_schema_help() {
  std::ostringstream out;
  out << "Config keys (JSON; --set key.path=value overrides):\n";
  schema_lines(default_config_json(), "", out);
  out << "  attacks[] elements follow the attack.* schema\n"
      << "Notes:\n"
      << "  attack.target_rule: next_class | fixed:K | random "
         "(targeted runs only; fixed:K skips samples of class K)\n"
      << "  attack.epsilon/pop: 0 selects the family default "
         "(nes 0.5/10, simba 0.05/1, genattack 0.2/8, boundary 0.1/1, "
         "signopt 0.01/10)\n"
      << "  defense.mode: auto derives soft/hard from the attack family; "
         "an explicit mode must agree with every configured attack\n"
      << "  defense.seed: noise seed for eval-acc; experiment runs derive "
         "per-run oracle seeds from the master seed\n";
  return out.str();
}

BlobData load_data(const json& resolved) {
  const json& d = resolved.at("data");
  const std::string train_csv = d.at("train_csv");
  const std::string test_csv = d.at("test_csv");
  if (!train_csv.empty() || !test_csv.empty()) {
    require(!train_csv.empty() && !test_csv.empty(),
            "config: set both data.train_csv and data.test_csv or neither");
    BlobData data;
    data.train = load_csv(train_csv);
    data.test = load_csv(test_csv);
    require(data.train.num_classes == data.test.num_classes &&
                data.train.dim == data.test.dim,
            "config: train/test CSV headers disagree");
    return data;
  }
  return gen_blobs(d.at("classes"), d.at("dim"), d.at("spread"),
                   d.at("per_class"), d.at("seed").get<std::uint64_t>());
}

Classifier load_model(const json& resolved, const Dataset& train_set) {
  const json& m = resolved.at("model");
  const std::string path = m.at("path");
  if (!path.empty()) return load_classifier(path);
  const std::string kind = m.at("kind");
  ClassifierKind k;
  if (kind == "mlp") {
    k = ClassifierKind::mlp;
  } else if (kind == "prototype") {
    k = ClassifierKind::prototype;
  } else {
    throw std::invalid_argument("config: model.kind must be mlp or prototype");
  }
  return train(train_set, k, m.at("epochs"), m.at("lr"),
               m.at("seed").get<std::uint64_t>());
}

AttackPlan attack_plan_from_json(const json& a) {
  AttackPlan plan;
  plan.spec.family = parse_family(a.at("family"));
  plan.spec.targeted = a.at("targeted");
  plan.spec.target = -1;
  plan.spec.budget = a.at("budget");
  plan.spec.epsilon = a.at("epsilon");
  plan.spec.lambda = a.at("lambda");
  plan.spec.pop = a.at("pop");
  plan.spec.seed = a.at("seed").get<std::uint64_t>();
  plan.spec.nes_step = a.at("nes_step");
  plan.spec.nes_radius = a.at("nes_radius");
  plan.spec.eps_source = a.at("eps_source");
  plan.spec.mut_prob = a.at("mut_prob");
  plan.spec.mut_range = a.at("mut_range");
  plan.spec.elite = a.at("elite");
  plan.target_rule = a.at("target_rule");
  return plan;
}

LoadedExperiment load_experiment(const json& resolved, bool sweep_grid) {
  LoadedExperiment loaded;
  loaded.data = load_data(resolved);
  loaded.classifier = load_model(resolved, loaded.data.train);

  ExperimentConfig& exp = loaded.experiment;
  exp.test_set = loaded.data.test;
  exp.classifier = loaded.classifier;
  exp.n_eval = resolved.at("eval").at("n_samples");
  exp.master_seed = resolved.at("seed").get<std::uint64_t>();
  const int jobs_raw = resolved.at("jobs");
  require(jobs_raw >= 0, "config: jobs must be >= 0 (0 = auto)");
  exp.jobs = jobs_raw >= 1
                 ? jobs_raw
                 : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  for (const json& L : resolved.at("thresholds"))
    exp.distortion_thresholds.push_back(L.get<double>());

  if (resolved.at("attacks").empty()) {
    exp.attacks.push_back(attack_plan_from_json(resolved.at("attack")));
  } else {
    for (const json& a : resolved.at("attacks"))
      exp.attacks.push_back(attack_plan_from_json(a));
  }

  const std::string mode = resolved.at("defense").at("mode");
  if (mode != "auto") {
    require(mode == "soft" || mode == "hard",
            "config: defense.mode must be auto, soft, or hard");
    for (const AttackPlan& plan : exp.attacks) {
      const bool wants_soft = family_is_soft(plan.spec.family);
      require(wants_soft == (mode == "soft"),
              "config: defense.mode '" + mode + "' is incompatible with attack "
              "family '" + family_name(plan.spec.family) + "'");
    }
  }

  if (sweep_grid) {
    for (const json& th : resolved.at("grid").at("thetas"))
      for (const json& sg : resolved.at("grid").at("sigmas"))
        exp.grid.push_back({th.get<double>(), sg.get<double>()});
  } else {
    exp.grid.push_back({resolved.at("defense").at("theta").get<double>(),
                        resolved.at("defense").at("sigma").get<double>()});
  }
  return loaded;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const json& resolved, const std::vector<std::string>& outputs,
                    const json& extra) {
  json j;
  j["command"] = command;
  j["config"] = resolved;
  j["config_hash"] = config_hash(resolved);
  j["seed"] = resolved.contains("seed") ? resolved.at("seed") : json(nullptr);
  j["outputs"] = outputs;
  if (!extra.is_null()) j["extra"] = extra;
  const std::filesystem::path path = std::filesystem::path(out_dir) / "manifest.json";
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace bdw
