#include "copt/instance_io.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace copt {

using nlohmann::json;

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vector(m.row(r).transpose())));
  return out;
}

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw std::invalid_argument(std::string("instance: missing key '") + key + "'");
  }
  return doc.at(key);
}

Vector vector_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw std::invalid_argument("instance: '" + where + "' must be an array");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw std::invalid_argument("instance: '" + where + "' must hold numbers");
    }
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json instance_to_json(const FiniteInstance& instance) {
  json doc;
  doc["actions"] = instance.actions.ids();
  if (const auto r = instance.actions.reject_index()) {
    doc["reject"] = instance.actions.id(*r);
  }
  json support = json::array();
  for (std::size_t i = 0; i < instance.num_points(); ++i) {
    support.push_back({{"x", to_json(instance.support.point(i))},
                       {"weight", instance.support.weight(i)}});
  }
  doc["support"] = std::move(support);
  json l = json::array();
  json c = json::array();
  for (std::size_t i = 0; i < instance.num_points(); ++i) {
    l.push_back(to_json(instance.L[i]));
    c.push_back(matrix_to_json(instance.C[i]));
  }
  doc["L"] = std::move(l);
  doc["C"] = std::move(c);
  doc["constraint_names"] = instance.constraint_names;
  return doc;
}

FiniteInstance instance_from_json(const json& doc) {
  const json& actions = field(doc, "actions");
  if (!actions.is_array() || actions.empty()) {
    throw std::invalid_argument("instance: 'actions' must be a nonempty array");
  }
  std::vector<std::string> ids;
  for (const auto& a : actions) {
    if (!a.is_string()) throw std::invalid_argument("instance: action ids must be strings");
    ids.push_back(a.get<std::string>());
  }
  std::optional<std::size_t> reject;
  if (doc.contains("reject")) {
    const auto id = doc.at("reject").get<std::string>();
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw std::invalid_argument("instance: 'reject' is not an action");
    reject = static_cast<std::size_t>(it - ids.begin());
  }
  ActionSpace space(ids, reject);
  const auto k = static_cast<Eigen::Index>(ids.size());

  const json& support = field(doc, "support");
  const json& l = field(doc, "L");
  const json& c = field(doc, "C");
  if (!support.is_array() || !l.is_array() || !c.is_array() ||
      l.size() != support.size() || c.size() != support.size()) {
    throw std::invalid_argument("instance: 'support', 'L' and 'C' must be arrays of equal length");
  }
  std::vector<Vector> points;
  std::vector<double> weights;
  std::vector<Vector> losses;
  std::vector<Matrix> mats;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const std::string at = "support[" + std::to_string(i) + "]";
    points.push_back(vector_from_json(field(support[i], "x"), at + ".x"));
    const json& w = field(support[i], "weight");
    if (!w.is_number()) throw std::invalid_argument("instance: '" + at + ".weight' must be a number");
    weights.push_back(w.get<double>());
    losses.push_back(vector_from_json(l[i], "L[" + std::to_string(i) + "]"));
    const json& rows = c[i];
    if (!rows.is_array()) {
      throw std::invalid_argument("instance: 'C[" + std::to_string(i) + "]' must be an array");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), k);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const Vector row = vector_from_json(rows[j], "C[" + std::to_string(i) + "][" +
                                                       std::to_string(j) + "]");
      if (row.size() != k) {
        throw std::invalid_argument("instance: constraint row length differs from |actions|");
      }
      m.row(static_cast<Eigen::Index>(j)) = row.transpose();
    }
    mats.push_back(std::move(m));
  }
  std::vector<std::string> names;
  if (doc.contains("constraint_names")) {
    names = doc.at("constraint_names").get<std::vector<std::string>>();
  }
  return FiniteInstance(std::move(space), Support(std::move(points), std::move(weights)),
                        std::move(losses), std::move(mats), std::move(names));
}

FiniteInstance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open instance file");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return instance_from_json(doc);
}

void write_instance(const FiniteInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write instance file");
  out << instance_to_json(instance).dump(2) << '\n';
}

json to_json(const OracleSolution& s) {
  json doc;
  doc["status"] = s.status == OracleStatus::kOptimal ? "optimal" : "infeasible";
  if (s.status != OracleStatus::kOptimal) return doc;
  doc["lp_value"] = s.lp_value;
  doc["lambda_star"] = to_json(s.lambda_star);
  doc["gamma"] = to_json(s.gamma);
  json pi = json::array();
  for (const auto& p : s.pi_star) pi.push_back(to_json(p));
  doc["pi_star"] = std::move(pi);
  doc["pivots"] = s.pivots;
  return doc;
}

json to_json(const NpReport& r) {
  json doc;
  doc["ok"] = r.ok();
  doc["support_ok"] = r.support_ok;
  doc["slackness_ok"] = r.slackness_ok;
  doc["gaps_ok"] = r.gaps_ok;
  doc["feasibility_ok"] = r.feasibility_ok;
  doc["max_mass_outside_argmin"] = r.max_mass_outside_argmin;
  doc["max_complementary_slackness"] = r.max_complementary_slackness;
  json betas = json::array();
  for (const auto& b : r.betas) {
    betas.push_back({{"beta", b.beta},
                     {"lambda_tilde", to_json(b.lambda_tilde)},
                     {"grid_boundary", b.grid_status == DualGridStatus::kBoundary},
                     {"risk", b.risk},
                     {"risk_gap", b.risk_gap},
                     {"gap_bound", b.gap_bound},
                     {"max_violation", b.max_violation},
                     {"mass_outside_argmin", b.mass_outside_argmin}});
  }
  doc["betas"] = std::move(betas);
  return doc;
}

json to_json(const Certificate& c) {
  return {{"grad_map_norm", c.grad_map_norm},
          {"delta_L", optional_json(c.delta_L)},
          {"delta_C", optional_json(c.delta_C)},
          {"deltas_available", c.deltas_available()},
          {"lambda_norm", c.lambda_norm},
          {"alpha", c.alpha.value()},
          {"beta", c.beta.value()},
          {"sigma_term", c.sigma_term},
          {"num_actions", c.num_actions},
          {"violation_bound", c.violation_bound},
          {"risk_gap_bound", c.risk_gap_bound}};
}

json to_json(const EvalReport& r) {
  json doc;
  doc["risk"] = optional_json(r.risk);
  doc["rejection_rate"] = optional_json(r.rejection_rate);
  doc["churn_rate"] = optional_json(r.churn_rate);
  doc["set_size"] = optional_json(r.set_size);
  json ks = json::array();
  for (const auto& v : r.ks_unfairness) ks.push_back(optional_json(v));
  doc["ks_unfairness"] = std::move(ks);
  json viol = json::array();
  for (std::size_t j = 0; j < r.violations.size(); ++j) {
    const std::string name =
        j < r.violation_names.size() ? r.violation_names[j] : "c" + std::to_string(j);
    viol.push_back({{"name", name}, {"value", r.violations[j]}});
  }
  doc["violations"] = std::move(viol);
  return doc;
}

}  // namespace copt
