#include "copt/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "copt/instance_io.hpp"
#include "copt/oracle.hpp"

namespace copt {

namespace {

// Caches predictions per feature vector; local polynomial fits are costly
// and the optimizer revisits pool points.
ClassProbModel memoize(const ClassProbModel& model) {
  auto cache = std::make_shared<std::map<std::vector<double>, Vector>>();
  return ClassProbModel(
      model.num_classes(),
      [model, cache](const Vector& x) -> Vector {
        std::vector<double> key(x.data(), x.data() + x.size());
        auto it = cache->find(key);
        if (it == cache->end()) it = cache->emplace(std::move(key), model(x)).first;
        return it->second;
      },
      model.name());
}

KernelSpec kernel_for(const EstimatorConfig& est, const LabeledData& train) {
  const std::size_t d = static_cast<std::size_t>(train.features.front().size());
  const double h = est.bandwidth ? *est.bandwidth
                                 : rule_of_thumb_bandwidth(train.size(), est.degree, d);
  return KernelSpec(est.kernel, h);
}

bool needs_groups(Family f) {
  return f == Family::kDemographicParity || f == Family::kEqualizedOdds;
}

ProbabilityModels fit_models(const LabeledData& train, std::size_t num_classes,
                             const RunConfig& config) {
  if (train.size() == 0) {
    throw ConfigError("data", "no labeled training data to fit the estimators");
  }
  const KernelSpec kernel = kernel_for(config.estimator, train);
  const std::size_t degree = config.estimator.degree;
  ProbabilityModels m{
      memoize(one_vs_all(train.labels, train.features, num_classes, degree, kernel)),
      std::nullopt, std::nullopt};
  if (!needs_groups(config.family.family)) return m;

  if (train.groups.empty()) throw ConfigError("data", "this family needs group labels");
  const std::size_t ns = train.num_groups;
  if (ns < 2) throw ConfigError("data", "group attribute takes fewer than two values");
  const Vector group_marg = empirical_marginals(train.groups, ns);
  if (config.family.family == Family::kDemographicParity) {
    if (config.family.aware_feature) {
      m.groups = SensitiveProbModel::aware(*config.family.aware_feature, group_marg);
    } else {
      const ClassProbModel tau =
          memoize(one_vs_all(train.groups, train.features, ns, degree, kernel));
      m.groups = SensitiveProbModel(
          ns, [tau](const Vector& x) { return tau(x); }, group_marg,
          "estimated group probabilities");
    }
    return m;
  }

  std::vector<std::size_t> combined(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    combined[i] = train.groups[i] * num_classes + train.labels[i];
  }
  const ClassProbModel q =
      memoize(one_vs_all(combined, train.features, ns * num_classes, degree, kernel));
  const Vector joint_flat = empirical_marginals(combined, ns * num_classes);
  JointProbModel joint;
  joint.fn = [q, ns, num_classes](const Vector& x) -> Matrix {
    const Vector flat = q(x);
    Matrix out(static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(num_classes));
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t y = 0; y < num_classes; ++y) {
        out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(y)) =
            flat(static_cast<Eigen::Index>(s * num_classes + y));
      }
    }
    return out;
  };
  joint.joint_marginals = Matrix(static_cast<Eigen::Index>(ns),
                                 static_cast<Eigen::Index>(num_classes));
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t y = 0; y < num_classes; ++y) {
      joint.joint_marginals(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(y)) =
          joint_flat(static_cast<Eigen::Index>(s * num_classes + y));
    }
  }
  joint.label_marginals = joint.joint_marginals.colwise().sum().transpose();
  // The joint fit need not marginalize to the class fit exactly; use its own
  // label marginal so the equalized-odds rows stay consistent.
  const ClassProbModel class_from_joint(
      num_classes,
      [q, ns, num_classes](const Vector& x) -> Vector {
        const Vector flat = q(x);
        Vector p = Vector::Zero(static_cast<Eigen::Index>(num_classes));
        for (std::size_t s = 0; s < ns; ++s) {
          p += flat.segment(static_cast<Eigen::Index>(s * num_classes),
                            static_cast<Eigen::Index>(num_classes));
        }
        return p;
      },
      "class probabilities from joint fit");
  m.probs = class_from_joint;
  m.joint = std::move(joint);
  return m;
}

// Appends a uniformly drawn label coordinate to every draw.
class AugmentingStream : public SampleStream {
 public:
  AugmentingStream(SampleStream& inner, const SetValuedProblem& problem,
                   std::uint64_t seed)
      : inner_(inner), problem_(problem), rng_(seed),
        pick_(0, problem.num_classes - 1) {}
  Vector next() override {
    ++draws_;
    const Vector x = inner_.next();
    return problem_.augment(x, pick_(rng_));
  }

 private:
  SampleStream& inner_;
  const SetValuedProblem& problem_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<std::size_t> pick_;
};

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace

std::function<std::size_t(const Vector&)> plug_in_classifier(const ClassProbModel& probs) {
  return [probs](const Vector& x) {
    const Vector p = probs(x);
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    return static_cast<std::size_t>(best);
  };
}

PreparedData prepare_data(const RunConfig& config) {
  if (config.synthetic) {
    SyntheticSpec spec = *config.synthetic;
    spec.seed = config.resolved_data_seed();
    SyntheticData data = synth_generate(spec);
    ProbabilityModels truth{data.class_model(), std::nullopt, std::nullopt};
    if (spec.num_groups > 0) {
      truth.groups = data.group_model();
      truth.joint = data.joint_model();
    }
    if (!config.estimator.use_true_probabilities && data.samples.size() == 0) {
      throw ConfigError("data.synthetic.num_samples",
                        "must be positive unless estimator.use_true_probabilities is set");
    }
    ProbabilityModels estimated = config.estimator.use_true_probabilities
                                      ? truth
                                      : fit_models(data.samples, spec.num_classes, config);
    Support support = data.support;
    return PreparedData{std::move(data), std::nullopt, spec.num_classes,
                        std::move(estimated), std::move(truth), std::move(support)};
  }

  const Dataset ds = ingest_csv(config.csv->path, config.csv->schema);
  DataSplit split = split_dataset(ds.data, config.resolved_data_seed());
  if (split.unlabeled.size() == 0) {
    throw ConfigError("data.csv.path", "too few rows for an unlabeled pool");
  }
  const std::size_t k = std::max<std::size_t>(ds.num_classes, 2);
  ProbabilityModels estimated = fit_models(split.train, k, config);
  Support support = Support::uniform(split.unlabeled.features);
  return PreparedData{std::nullopt, std::move(split), k, std::move(estimated),
                      std::nullopt, std::move(support)};
}

FamilyProblem build_family(const FamilyConfig& family, const ProbabilityModels& models,
                           std::function<std::size_t(const Vector&)> base_classifier) {
  try {
    switch (family.family) {
      case Family::kStandard: return {build_standard(models.probs), std::nullopt};
      case Family::kRejection:
        return {build_controlled_rejection(models.probs, family.budget), std::nullopt};
      case Family::kError:
        return {build_controlled_error(models.probs, family.budget), std::nullopt};
      case Family::kDemographicParity:
        if (!models.groups) throw std::invalid_argument("missing group model");
        return {build_demographic_parity(models.probs, *models.groups, family.eps),
                std::nullopt};
      case Family::kEqualizedOdds:
        if (!models.joint) throw std::invalid_argument("missing joint model");
        return {build_equalized_odds(models.probs, *models.joint, family.eps), std::nullopt};
      case Family::kChurn:
        return {build_churn(models.probs, std::move(base_classifier), family.budget),
                std::nullopt};
      case Family::kSetSize:
      case Family::kSetRisk: {
        const auto mode = family.family == Family::kSetSize ? SetValuedMode::kSizeBudget
                                                            : SetValuedMode::kRiskBudget;
        SetValuedProblem svp = build_set_valued(models.probs, mode, family.budget);
        Problem coordinate = svp.coordinate_problem;
        return {std::move(coordinate), std::move(svp)};
      }
    }
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("family", e.what());
  }
  throw ConfigError("family.name", "unsupported family");
}

std::optional<bool> RunArtifacts::violation_sound() const {
  if (!measured_violation) return std::nullopt;
  return *measured_violation <= certificate.violation_bound + 1e-9;
}

std::optional<bool> RunArtifacts::risk_sound() const {
  if (!measured_risk || !lp_value) return std::nullopt;
  return *measured_risk <= *lp_value + certificate.risk_gap_bound + 1e-9;
}

RunArtifacts run_prepared(const RunConfig& config, const PreparedData& data) {
  const auto base = plug_in_classifier(data.estimated.probs);
  const FamilyProblem est = build_family(config.family, data.estimated, base);
  std::optional<FamilyProblem> truth;
  if (data.truth) truth = build_family(config.family, *data.truth, base);
  if (est.problem.num_constraints() == 0) {
    throw ConfigError("family.name", "the chosen family has no constraints to optimize");
  }

  const bool set_valued = est.set_valued.has_value();
  const Support eval = set_valued ? est.set_valued->augment(data.eval_support)
                                  : data.eval_support;

  std::unique_ptr<SampleStream> base_stream;
  if (data.synthetic) {
    base_stream = std::make_unique<SupportStream>(data.eval_support, config.stream_seed());
  } else {
    auto pool = std::make_unique<PoolStream>(data.split->unlabeled.features,
                                             config.stream_seed(), config.optimizer.passes);
    if (config.optimizer.T > pool->capacity()) {
      throw std::runtime_error("T = " + std::to_string(config.optimizer.T) +
                               " exceeds the unlabeled pool (" +
                               std::to_string(pool->capacity()) +
                               " draws with the configured passes)");
    }
    base_stream = std::move(pool);
  }
  std::unique_ptr<SampleStream> aug_stream;
  if (set_valued) {
    aug_stream = std::make_unique<AugmentingStream>(*base_stream, *est.set_valued,
                                                    config.stream_seed() + 1);
  }
  SampleStream& stream = aug_stream ? *aug_stream : *base_stream;

  CoptOptions options;
  options.T = config.optimizer.T;
  options.beta_mode = config.optimizer.beta_mode;
  options.beta = config.optimizer.beta;
  options.sigma_sq = config.optimizer.sigma_sq;
  options.mu = config.optimizer.mu;
  options.seed = config.seed;
  const Sgd3Optimizer sgd3_opt(TraceOptions{config.optimizer.trace_every});
  const ProjectedSgdOptimizer psgd_opt;
  const BlackBoxOptimizer& optimizer =
      config.optimizer.method == "sgd3" ? static_cast<const BlackBoxOptimizer&>(sgd3_opt)
                                        : psgd_opt;
  CoptResult result = copt(est.problem, stream, eval.points(), options, optimizer);
  const RandomizedClassifier& clf = result.classifier;

  std::optional<TrueOracles> oracles;
  if (truth) oracles = TrueOracles{truth->problem.loss, truth->problem.constraints};
  RunArtifacts art{config.family.family,
                   config.family.budget,
                   config.seed,
                   result.params,
                   result.optimizer.lambda_hat,
                   result.optimizer.trace,
                   certify(clf, eval, result.optimizer.alpha_cert, oracles),
                   EvalReport{},
                   std::nullopt,
                   std::nullopt,
                   std::nullopt,
                   std::nullopt,
                   clf.actions().ids(),
                   data.eval_support.points(),
                   {}};
  if (needs_groups(config.family.family) && !config.family.eps.empty()) {
    art.budget = config.family.eps.front();
  }

  const double k = static_cast<double>(data.num_classes);
  if (truth) {
    const FiniteInstance inst = FiniteInstance::tabulate(truth->problem, eval);
    std::vector<Vector> pi;
    for (const auto& x : eval.points()) pi.push_back(clf.predict_proba(x));
    art.measured_risk = inst.risk(pi);
    art.measured_violation = positive_part(inst.constraint_values(pi)).norm();
    if (inst.num_points() * inst.num_actions() <= kLpSizeLimit) {
      const OracleSolution lp = solve_lp_exact(inst);
      if (lp.status == OracleStatus::kOptimal) art.lp_value = lp.lp_value;
    }
    if (set_valued) {
      const auto& svp = *est.set_valued;
      const InclusionFn incl = [&](const Vector& x) { return inclusion_probabilities(svp, clf, x); };
      art.evaluation.risk = set_risk(incl, data.truth->probs, data.eval_support);
      art.evaluation.set_size = set_size(incl, data.eval_support);
      for (const auto& v : evaluate_truth(clf, inst).violations) {
        art.evaluation.violations.push_back(k * v);
      }
      art.evaluation.violation_names = inst.constraint_names;
    } else {
      art.evaluation = evaluate_truth(clf, inst);
      if (data.truth->groups) {
        art.evaluation.ks_unfairness =
            exact_ks_unfairness(clf, data.eval_support, *data.truth->groups);
      }
      if (config.family.family == Family::kChurn) {
        double churn = 0.0;
        for (std::size_t i = 0; i < eval.size(); ++i) {
          churn += eval.weight(i) *
                   (1.0 - pi[i](static_cast<Eigen::Index>(base(eval.point(i)))));
        }
        art.evaluation.churn_rate = churn;
      }
    }
  }

  EvalOptions eo;
  if (config.family.family == Family::kChurn) eo.base_classifier = base;
  eo.constraints = est.problem.constraints;
  eo.seed = config.eval_seed();
  const LabeledData* labeled = nullptr;
  if (data.split) labeled = &data.split->test;
  if (data.synthetic && data.synthetic->samples.size() > 0) labeled = &data.synthetic->samples;
  if (labeled && labeled->size() > 0) {
    EvalReport rep = set_valued ? evaluate_set_valued(*est.set_valued, clf, *labeled)
                                : evaluate(clf, *labeled, eo);
    if (truth) {
      art.sample_evaluation = std::move(rep);
    } else {
      art.evaluation = std::move(rep);
    }
  }

  for (const auto& x : data.eval_support.points()) {
    art.probabilities.push_back(set_valued ? inclusion_probabilities(*est.set_valued, clf, x)
                                           : clf.predict_proba(x));
  }
  if (set_valued) {
    art.action_ids.clear();
    for (std::size_t y = 0; y < data.num_classes; ++y) art.action_ids.push_back("in_" + std::to_string(y));
  }
  return art;
}

RunArtifacts run_pipeline(const RunConfig& config) {
  return run_prepared(config, prepare_data(config));
}

void write_run_artifacts(const RunArtifacts& a, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    out << body;
  };
  const nlohmann::json lambda{{"lambda", to_json(a.lambda.values())},
                              {"beta", a.params.beta},
                              {"alpha_cert", a.certificate.alpha.value()},
                              {"T", a.params.T},
                              {"seed", a.seed}};
  write("lambda.json", lambda.dump(2) + "\n");

  nlohmann::json cert = to_json(a.certificate);
  cert["lp_value"] = a.lp_value ? nlohmann::json(*a.lp_value) : nlohmann::json(nullptr);
  cert["measured_violation"] =
      a.measured_violation ? nlohmann::json(*a.measured_violation) : nlohmann::json(nullptr);
  cert["measured_risk"] = a.measured_risk ? nlohmann::json(*a.measured_risk) : nlohmann::json(nullptr);
  if (const auto s = a.violation_sound()) cert["violation_sound"] = *s;
  if (const auto s = a.risk_sound()) cert["risk_sound"] = *s;
  write("certificate.json", cert.dump(2) + "\n");

  nlohmann::json eval{{"family", to_string(a.family)}, {"report", to_json(a.evaluation)}};
  if (a.sample_evaluation) eval["sample_report"] = to_json(*a.sample_evaluation);
  write("evaluation.json", eval.dump(2) + "\n");

  const nlohmann::json params{{"T", a.params.T},
                              {"beta", a.params.beta},
                              {"mu", a.params.mu},
                              {"smoothness", a.params.smoothness},
                              {"sigma_sq", a.params.sigma_sq},
                              {"seed", a.params.seed}};
  write("params.json", params.dump(2) + "\n");

  std::ostringstream probs;
  probs << "point";
  for (const auto& id : a.action_ids) probs << ',' << id;
  probs << '\n';
  for (std::size_t i = 0; i < a.probabilities.size(); ++i) {
    probs << i;
    for (Eigen::Index j = 0; j < a.probabilities[i].size(); ++j) {
      probs << ',' << format_number(a.probabilities[i](j));
    }
    probs << '\n';
  }
  write("probabilities.csv", probs.str());

  if (!a.trace.empty()) {
    std::ostringstream trace;
    trace << "iteration,stage,objective,lambda_norm,elapsed_seconds\n";
    for (const auto& r : a.trace) {
      trace << r.iteration << ',' << r.stage << ',' << format_number(r.objective) << ','
            << format_number(r.lambda_norm) << ',' << format_number(r.elapsed_seconds)
            << '\n';
    }
    write("trace.csv", trace.str());
  }
}

std::vector<std::string> sweep_columns() {
  return {"family",         "budget",          "seed",          "T",
          "beta",           "risk",            "violation",     "violation_bound",
          "grad_map_norm",  "delta_L",         "delta_C",       "risk_gap_bound",
          "lp_value",       "lambda_norm",     "rejection_rate", "ks_max",
          "set_size",       "churn_rate"};
}

std::string format_sweep_row(const RunArtifacts& a) {
  std::optional<double> ks;
  for (const auto& v : a.evaluation.ks_unfairness) {
    if (v) ks = ks ? std::max(*ks, *v) : *v;
  }
  const auto& c = a.certificate;
  std::ostringstream row;
  row << to_string(a.family) << ',' << format_number(a.budget) << ',' << a.seed << ','
      << a.params.T << ',' << format_number(a.params.beta) << ','
      << format_optional(a.evaluation.risk) << ',' << format_optional(a.measured_violation)
      << ',' << format_number(c.violation_bound) << ',' << format_number(c.grad_map_norm)
      << ',' << format_optional(c.delta_L) << ',' << format_optional(c.delta_C) << ','
      << format_number(c.risk_gap_bound) << ',' << format_optional(a.lp_value) << ','
      << format_number(c.lambda_norm) << ',' << format_optional(a.evaluation.rejection_rate)
      << ',' << format_optional(ks) << ',' << format_optional(a.evaluation.set_size) << ','
      << format_optional(a.evaluation.churn_rate);
  return row.str();
}

std::size_t run_sweep(const RunConfig& config, std::ostream& out, bool write_header,
                      std::optional<std::uint64_t> only_seed) {
  if (!config.sweep || config.sweep->budgets.empty()) {
    throw ConfigError("sweep.budgets", "must not be empty");
  }
  if (write_header) {
    const auto cols = sweep_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n' << std::flush;
  }
  RunConfig base = config;
  base.data_seed = config.resolved_data_seed();
  const PreparedData data = prepare_data(base);
  std::size_t rows = 0;
  for (double budget : config.sweep->budgets) {
    RunConfig cell = base;
    cell.family.budget = budget;
    if (needs_groups(cell.family.family)) {
      std::fill(cell.family.eps.begin(), cell.family.eps.end(), budget);
    }
    for (std::uint64_t seed : config.sweep->seeds) {
      if (only_seed && seed != *only_seed) continue;
      cell.seed = seed;
      const RunArtifacts art = run_prepared(cell, data);
      out << format_sweep_row(art) << '\n' << std::flush;
      ++rows;
    }
  }
  return rows;
}

}  // namespace copt
