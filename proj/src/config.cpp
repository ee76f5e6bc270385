#include "copt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace copt {

using nlohmann::json;

Family parse_family(const std::string& name) {
  if (name == "standard") return Family::kStandard;
  if (name == "rejection") return Family::kRejection;
  if (name == "error") return Family::kError;
  if (name == "demographic_parity") return Family::kDemographicParity;
  if (name == "equalized_odds") return Family::kEqualizedOdds;
  if (name == "churn") return Family::kChurn;
  if (name == "set_size") return Family::kSetSize;
  if (name == "set_risk") return Family::kSetRisk;
  throw std::invalid_argument("unknown family '" + name + "'");
}

std::string to_string(Family family) {
  switch (family) {
    case Family::kStandard: return "standard";
    case Family::kRejection: return "rejection";
    case Family::kError: return "error";
    case Family::kDemographicParity: return "demographic_parity";
    case Family::kEqualizedOdds: return "equalized_odds";
    case Family::kChurn: return "churn";
    case Family::kSetSize: return "set_size";
    case Family::kSetRisk: return "set_risk";
  }
  return "unknown";
}

bool is_set_valued(Family family) {
  return family == Family::kSetSize || family == Family::kSetRisk;
}

namespace {

// Typed access to one JSON object, reporting errors with the dotted path.
class Reader {
 public:
  Reader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(name(), "must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : doc_.items()) {
      if (!known.count(key)) throw ConfigError(name(key), "unknown key");
    }
  }

  bool has(const char* key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }
  const json& raw(const char* key) const { return doc_.at(key); }
  std::string name(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const char* key) const {
    const json& v = require(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw ConfigError(name(key), "must be a finite number");
    }
    return v.get<double>();
  }

  std::uint64_t count(const char* key) const {
    const json& v = require(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError(name(key), "must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const char* key) const {
    const json& v = require(key);
    if (!v.is_string()) throw ConfigError(name(key), "must be a string");
    return v.get<std::string>();
  }

  bool flag(const char* key) const {
    const json& v = require(key);
    if (!v.is_boolean()) throw ConfigError(name(key), "must be true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const char* key) const {
    const json& v = require(key);
    if (!v.is_array()) throw ConfigError(name(key), "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        throw ConfigError(name(key), "must be an array of finite numbers");
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::string> texts(const char* key) const {
    const json& v = require(key);
    if (!v.is_array()) throw ConfigError(name(key), "must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError(name(key), "must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  Reader child(const char* key) const { return Reader(require(key), name(key)); }

 private:
  const json& require(const char* key) const {
    if (!has(key)) throw ConfigError(name(key), "is required");
    return doc_.at(key);
  }

  const json& doc_;
  std::string path_;
};

void check_open_unit(double v, const std::string& field) {
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(field, "must lie in (0, 1)");
}

FamilyConfig parse_family_section(const Reader& r) {
  r.allow({"name", "budget", "eps", "aware_feature"});
  FamilyConfig f;
  try {
    f.family = parse_family(r.text("name"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.name("name"), e.what());
  }
  if (r.has("budget")) f.budget = r.number("budget");
  if (r.has("eps")) f.eps = r.numbers("eps");
  if (r.has("aware_feature")) f.aware_feature = r.count("aware_feature");

  switch (f.family) {
    case Family::kRejection:
    case Family::kError:
    case Family::kChurn:
    case Family::kSetRisk:
      if (!r.has("budget")) throw ConfigError(r.name("budget"), "is required for this family");
      check_open_unit(f.budget, r.name("budget"));
      break;
    case Family::kSetSize:
      if (!r.has("budget")) throw ConfigError(r.name("budget"), "is required for this family");
      if (!(f.budget > 0.0)) throw ConfigError(r.name("budget"), "must be positive");
      break;
    case Family::kDemographicParity:
    case Family::kEqualizedOdds:
      if (f.eps.empty()) throw ConfigError(r.name("eps"), "is required for this family");
      for (double e : f.eps) {
        if (!(e >= 0.0)) throw ConfigError(r.name("eps"), "entries must be nonnegative");
      }
      break;
    case Family::kStandard:
      break;
  }
  return f;
}

SyntheticSpec parse_synthetic(const Reader& r) {
  r.allow({"dim", "num_classes", "num_groups", "support_size", "num_samples",
           "separation", "group_shift", "group_strength"});
  SyntheticSpec s;
  if (r.has("dim")) s.dim = r.count("dim");
  if (r.has("num_classes")) s.num_classes = r.count("num_classes");
  if (r.has("num_groups")) s.num_groups = r.count("num_groups");
  if (r.has("support_size")) s.support_size = r.count("support_size");
  if (r.has("num_samples")) s.num_samples = r.count("num_samples");
  if (r.has("separation")) s.separation = r.number("separation");
  if (r.has("group_shift")) s.group_shift = r.number("group_shift");
  if (r.has("group_strength")) s.group_strength = r.number("group_strength");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.name(), e.what());
  }
  return s;
}

CsvSource parse_csv(const Reader& r) {
  r.allow({"path", "label", "group", "features"});
  CsvSource c;
  c.path = r.text("path");
  if (r.has("label")) c.schema.label = r.text("label");
  if (r.has("group")) c.schema.group = r.text("group");
  if (r.has("features")) c.schema.features = r.texts("features");
  return c;
}

EstimatorConfig parse_estimator(const Reader& r) {
  r.allow({"degree", "kernel", "bandwidth", "use_true_probabilities"});
  EstimatorConfig e;
  if (r.has("degree")) e.degree = r.count("degree");
  if (r.has("kernel")) {
    try {
      e.kernel = parse_kernel_shape(r.text("kernel"));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(r.name("kernel"), ex.what());
    }
  }
  if (r.has("bandwidth")) {
    e.bandwidth = r.number("bandwidth");
    if (!(*e.bandwidth > 0.0)) throw ConfigError(r.name("bandwidth"), "must be positive");
  }
  if (r.has("use_true_probabilities")) e.use_true_probabilities = r.flag("use_true_probabilities");
  return e;
}

OptimizerConfig parse_optimizer(const Reader& r) {
  r.allow({"T", "beta_mode", "beta", "sigma_sq", "mu", "method", "passes", "trace_every"});
  OptimizerConfig o;
  if (r.has("T")) o.T = r.count("T");
  if (o.T < 2) throw ConfigError(r.name("T"), "must be at least 2");
  if (r.has("beta_mode")) {
    const auto mode = r.text("beta_mode");
    if (mode == "theory") {
      o.beta_mode = BetaMode::kTheory;
    } else if (mode == "experiment") {
      o.beta_mode = BetaMode::kExperiment;
    } else {
      throw ConfigError(r.name("beta_mode"), "must be 'theory' or 'experiment'");
    }
  }
  auto positive = [&](const char* key) -> std::optional<double> {
    if (!r.has(key)) return std::nullopt;
    const double v = r.number(key);
    if (!(v > 0.0)) throw ConfigError(r.name(key), "must be positive");
    return v;
  };
  o.beta = positive("beta");
  o.sigma_sq = positive("sigma_sq");
  o.mu = positive("mu");
  if (r.has("method")) {
    o.method = r.text("method");
    if (o.method != "sgd3" && o.method != "projected_sgd") {
      throw ConfigError(r.name("method"), "must be 'sgd3' or 'projected_sgd'");
    }
  }
  if (r.has("passes")) o.passes = r.count("passes");
  if (o.passes < 1) throw ConfigError(r.name("passes"), "must be at least 1");
  if (r.has("trace_every")) o.trace_every = r.count("trace_every");
  return o;
}

SweepConfig parse_sweep(const Reader& r) {
  r.allow({"budgets", "seeds"});
  SweepConfig s;
  s.budgets = r.numbers("budgets");
  if (s.budgets.empty()) throw ConfigError(r.name("budgets"), "must not be empty");
  if (!r.has("seeds") || !r.raw("seeds").is_array() || r.raw("seeds").empty()) {
    throw ConfigError(r.name("seeds"), "must be a nonempty array of integers");
  }
  const json& seeds = r.raw("seeds");
  for (const auto& v : seeds) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError(r.name("seeds"), "must hold nonnegative integers");
    }
    s.seeds.push_back(v.get<std::uint64_t>());
  }
  return s;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  const Reader root(doc, "");
  root.allow({"version", "seed", "data_seed", "output_dir", "family", "data",
              "estimator", "optimizer", "sweep"});
  RunConfig cfg;
  const auto version = root.count("version");
  if (version != static_cast<std::uint64_t>(kConfigVersion)) {
    throw ConfigError("version", "unsupported version " + std::to_string(version) +
                                     " (expected " + std::to_string(kConfigVersion) + ")");
  }
  cfg.version = kConfigVersion;
  if (root.has("seed")) cfg.seed = root.count("seed");
  if (root.has("data_seed")) cfg.data_seed = root.count("data_seed");
  if (root.has("output_dir")) cfg.output_dir = root.text("output_dir");
  cfg.family = parse_family_section(root.child("family"));

  const Reader data = root.child("data");
  data.allow({"synthetic", "csv"});
  if (data.has("synthetic") == data.has("csv")) {
    throw ConfigError("data", "exactly one of 'synthetic' or 'csv' must be given");
  }
  if (data.has("synthetic")) cfg.synthetic = parse_synthetic(data.child("synthetic"));
  if (data.has("csv")) cfg.csv = parse_csv(data.child("csv"));

  if (root.has("estimator")) cfg.estimator = parse_estimator(root.child("estimator"));
  if (cfg.estimator.use_true_probabilities && !cfg.synthetic) {
    throw ConfigError("estimator.use_true_probabilities", "requires synthetic data");
  }
  if (root.has("optimizer")) cfg.optimizer = parse_optimizer(root.child("optimizer"));
  if (root.has("sweep")) cfg.sweep = parse_sweep(root.child("sweep"));

  const bool grouped = cfg.family.family == Family::kDemographicParity ||
                       cfg.family.family == Family::kEqualizedOdds;
  if (grouped) {
    if (cfg.synthetic && cfg.synthetic->num_groups == 0) {
      throw ConfigError("data.synthetic.num_groups", "this family needs groups");
    }
    if (cfg.csv && !cfg.csv->schema.group && !cfg.family.aware_feature) {
      throw ConfigError("data.csv.group", "this family needs a group column");
    }
    if (cfg.synthetic) {
      const std::size_t s = cfg.synthetic->num_groups;
      const std::size_t want = cfg.family.family == Family::kDemographicParity
                                   ? s
                                   : s * cfg.synthetic->num_classes;
      if (cfg.family.eps.size() != want) {
        throw ConfigError("family.eps", "expected " + std::to_string(want) + " entries");
      }
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const RunConfig& c) {
  json doc;
  doc["version"] = c.version;
  doc["seed"] = c.seed;
  if (c.data_seed) doc["data_seed"] = *c.data_seed;
  doc["output_dir"] = c.output_dir;
  json fam{{"name", to_string(c.family.family)}, {"budget", c.family.budget}};
  if (!c.family.eps.empty()) fam["eps"] = c.family.eps;
  if (c.family.aware_feature) fam["aware_feature"] = *c.family.aware_feature;
  doc["family"] = fam;
  if (c.synthetic) {
    const auto& s = *c.synthetic;
    doc["data"]["synthetic"] = {{"dim", s.dim},
                                {"num_classes", s.num_classes},
                                {"num_groups", s.num_groups},
                                {"support_size", s.support_size},
                                {"num_samples", s.num_samples},
                                {"separation", s.separation},
                                {"group_shift", s.group_shift},
                                {"group_strength", s.group_strength}};
  }
  if (c.csv) {
    json csv{{"path", c.csv->path}, {"label", c.csv->schema.label}};
    if (c.csv->schema.group) csv["group"] = *c.csv->schema.group;
    if (!c.csv->schema.features.empty()) csv["features"] = c.csv->schema.features;
    doc["data"]["csv"] = csv;
  }
  json est{{"degree", c.estimator.degree},
           {"kernel", to_string(c.estimator.kernel)},
           {"use_true_probabilities", c.estimator.use_true_probabilities}};
  if (c.estimator.bandwidth) est["bandwidth"] = *c.estimator.bandwidth;
  doc["estimator"] = est;
  json opt{{"T", c.optimizer.T},
           {"beta_mode", c.optimizer.beta_mode == BetaMode::kTheory ? "theory" : "experiment"},
           {"method", c.optimizer.method},
           {"passes", c.optimizer.passes},
           {"trace_every", c.optimizer.trace_every}};
  if (c.optimizer.beta) opt["beta"] = *c.optimizer.beta;
  if (c.optimizer.sigma_sq) opt["sigma_sq"] = *c.optimizer.sigma_sq;
  if (c.optimizer.mu) opt["mu"] = *c.optimizer.mu;
  doc["optimizer"] = opt;
  if (c.sweep) doc["sweep"] = {{"budgets", c.sweep->budgets}, {"seeds", c.sweep->seeds}};
  return doc;
}

}  // namespace copt
