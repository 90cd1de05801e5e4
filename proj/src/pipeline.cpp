#include "nudgelab/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "nudgelab/analyze.hpp"
#include "nudgelab/behavior_csv.hpp"
#include "nudgelab/core_model.hpp"
#include "nudgelab/error.hpp"
#include "nudgelab/eval.hpp"
#include "nudgelab/fitting.hpp"
#include "nudgelab/random.hpp"
#include "nudgelab/simulate.hpp"

namespace nudgelab {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Treatment kAssisted[] = {Treatment::immediate, Treatment::delayed, Treatment::explanation};

void write_file(const fs::path& path, const std::string& contents) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::usage, "cannot write " + path.string());
  out << contents;
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::string csv_preamble(const std::string& fingerprint) {
  return "# config_fingerprint=" + fingerprint + "\n";
}

std::string fmt(double v) { return format_double(v); }

std::string safe_name(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    if (!ok) c = '_';
  }
  return out;
}

fs::path data_path(const PipelineOptions& o) {
  return o.data_path ? *o.data_path : o.out_dir / "behavior.csv";
}

IngestResult load_data(const PipelineOptions& o, std::ostream& log) {
  IngestResult data = ingest(data_path(o), o.skip_invalid);
  for (const auto& e : data.errors) log << "skipped invalid row: " << e << '\n';
  require(data.n_features == o.config.n_features, ErrorKind::validation,
          "data has " + std::to_string(data.n_features) + " features but config n_features is " +
              std::to_string(o.config.n_features));
  return data;
}

std::vector<Treatment> assisted_treatments(const PipelineOptions& o,
                                           std::span<const BehaviorRecord> records) {
  if (o.treatment) {
    require(*o.treatment != Treatment::independent, ErrorKind::usage,
            "this command needs an assisted treatment");
    return {*o.treatment};
  }
  std::vector<Treatment> out;
  for (Treatment t : kAssisted) {
    if (std::any_of(records.begin(), records.end(), [&](const auto& r) { return r.treatment == t; })) {
      out.push_back(t);
    }
  }
  return out;
}

json fit_to_json(const NudgeFitResult& fit, const std::string& subject, Treatment t,
                 std::optional<int> crt, const std::string& mode, const std::string& fingerprint) {
  json j = {
      {"config_fingerprint", fingerprint},
      {"subject_id", subject},
      {"treatment", std::string(to_string(t))},
      {"mode", mode},
      {"train_nll", fit.train_nll},
      {"converged", fit.converged},
      {"restart_index", fit.restart_index},
      {"unconstrained",
       {{"layout", t == Treatment::explanation ? "v; delta_exp = sigmoid(v)"
                                               : "[tau, u_1..u_n] per vector; magnitudes = softplus(u)"},
        {"values", fit.unconstrained}}},
      {"params", to_json(fit.params)},
  };
  j["crt_score"] = crt ? json(*crt) : json(nullptr);
  return j;
}

void cmd_simulate(const PipelineOptions& o, const std::string& fp, std::ostream& log) {
  const SimulatedStudy study = simulate_study(o.config.simulation);
  std::ostringstream csv;
  write_behavior_csv(csv, study.records, o.config.n_features, fp);
  write_file(o.out_dir / "behavior.csv", csv.str());
  json subjects = json::array();
  for (const auto& s : study.subjects) {
    json js = {{"subject_id", s.id},
               {"treatment", std::string(to_string(s.treatment))},
               {"true_weights", to_json(s.true_weights)},
               {"true_params", to_json(s.true_params)},
               {"noise_temperature", s.noise_temperature}};
    js["crt_score"] = s.crt_score ? json(*s.crt_score) : json(nullptr);
    subjects.push_back(js);
  }
  write_json(o.out_dir / "simulation_truth.json",
             {{"config_fingerprint", fp}, {"ai", to_json(study.ai.weights)},
              {"ai_top_k", study.ai.top_k}, {"subjects", subjects}});
  log << "simulate: wrote " << study.records.size() << " records for " << study.subjects.size()
      << " subjects\n";
}

void cmd_fit_population(const PipelineOptions& o, const std::string& fp, std::ostream& log) {
  const IngestResult data = load_data(o, log);
  std::vector<std::pair<TaskInstance, int>> pairs;
  for (const auto& r : data.records) {
    if (r.treatment == Treatment::independent) pairs.emplace_back(r.task(), r.final_decision);
  }
  require(!pairs.empty(), ErrorKind::usage, "fit-population needs independent-treatment records");
  const PopulationFitReport report = fit_population_report(pairs, o.config.population);
  const auto& post = report.posterior;
  write_json(o.out_dir / "population.json",
             {{"config_fingerprint", fp},
              {"mean", post.mean()},
              {"variance", post.variance()},
              {"ensemble_size", post.ensemble().size()},
              {"seed", post.seed()},
              {"use_bias", post.use_bias()},
              {"prior_variance", o.config.population.prior_variance},
              {"n_observations", pairs.size()},
              {"elbo_initial", report.initial_elbo},
              {"elbo_final", report.final_elbo},
              {"best_iteration", report.best_iteration}});
  log << "fit-population: " << pairs.size() << " decisions, ELBO " << report.initial_elbo << " -> "
      << report.final_elbo << '\n';
}

void cmd_fit_nudge(const PipelineOptions& o, const std::string& fp, std::ostream& log) {
  const PopulationPosterior posterior = load_population(o.out_dir / "population.json");
  const IngestResult data = load_data(o, log);
  const auto treatments = assisted_treatments(o, data.records);
  const bool ablation = o.deterministic_ablation;
  const std::string dir = ablation ? "nudge_deterministic" : "nudge";
  std::ostringstream summary;
  summary << csv_preamble(fp) << "subject_id,treatment,mode,train_nll,converged,restart_index\n";
  for (Treatment t : treatments) {
    require(!ablation || t == Treatment::delayed, ErrorKind::usage,
            "--deterministic-ablation applies to the delayed treatment only");
    const auto subjects = group_by_subject(data.records, t);
    for (const auto& [id, trials] : subjects) {
      const NudgeFitResult fit =
          ablation ? fit_nudge_deterministic_ablation(trials, fit_point_model(trials, o.config.baseline_l2),
                                                      t, o.config.nudge)
                   : fit_nudge(trials, posterior, t, o.config.nudge);
      const std::string mode = ablation ? "deterministic" : "probabilistic";
      write_json(o.out_dir / dir / std::string(to_string(t)) / (safe_name(id) + ".json"),
                 fit_to_json(fit, id, t, trials.front().crt_score, mode, fp));
      summary << id << ',' << to_string(t) << ',' << mode << ',' << fmt(fit.train_nll) << ','
              << (fit.converged ? 1 : 0) << ',' << fit.restart_index << '\n';
    }
    log << "fit-nudge: " << to_string(t) << " fitted " << subjects.size() << " subjects\n";
  }
  write_file(o.out_dir / dir / "summary.csv", summary.str());
}

void cmd_evaluate(const PipelineOptions& o, const std::string& fp, std::ostream& log) {
  const PopulationPosterior posterior = load_population(o.out_dir / "population.json");
  const IngestResult data = load_data(o, log);
  SplitPlan plan = o.config.split;
  plan.train_size = o.train_size;
  std::ostringstream subjects, summary;
  subjects << csv_preamble(fp) << "treatment,method,run_seed,subject_id,nll,accuracy,f1\n";
  summary << csv_preamble(fp) << "treatment,method,nll,accuracy,f1,n_subjects,n_runs\n";
  for (Treatment t : assisted_treatments(o, data.records)) {
    std::vector<EvalReport> reports;
    reports.push_back(evaluate_framework(data.records, posterior, t, plan, o.config.nudge));
    reports.push_back(baseline_logistic(data.records, t, plan, o.config.baseline_l2));
    reports.push_back(evaluate_unnudged(data.records, posterior, t, plan));
    if (o.deterministic_ablation && t == Treatment::delayed) {
      reports.push_back(evaluate_deterministic_ablation(data.records, t, plan, o.config.nudge,
                                                        o.config.baseline_l2));
    }
    for (const auto& r : reports) {
      for (const auto& w : r.warnings) log << "evaluate: " << w << '\n';
      for (const auto& s : r.per_subject) {
        subjects << to_string(t) << ',' << r.method << ',' << s.run_seed << ',' << s.subject_id << ','
                 << fmt(s.metrics.nll) << ',' << fmt(s.metrics.accuracy) << ',' << fmt(s.metrics.f1)
                 << '\n';
      }
      summary << to_string(t) << ',' << r.method << ',' << fmt(r.nll) << ',' << fmt(r.accuracy) << ','
              << fmt(r.f1) << ',' << r.n_subjects << ',' << r.n_runs << '\n';
    }
    summary << to_string(t) << ",uninformative," << fmt(std::log(2.0)) << ",,,,\n";
    log << "evaluate: " << to_string(t) << " framework NLL " << reports[0].nll << ", logistic NLL "
        << reports[1].nll << '\n';
  }
  write_file(o.out_dir / "eval_subjects.csv", subjects.str());
  write_file(o.out_dir / "eval_summary.csv", summary.str());
}

void cmd_learning_curve(const PipelineOptions& o, const std::string& fp, std::ostream& log) {
  const PopulationPosterior posterior = load_population(o.out_dir / "population.json");
  const IngestResult data = load_data(o, log);
  std::ostringstream out;
  out << csv_preamble(fp) << "treatment,size,method,run_seed,nll,accuracy,f1,n_subjects\n";
  for (Treatment t : assisted_treatments(o, data.records)) {
    LearningCurveOptions opts;
    opts.train_sizes = o.train_size ? std::vector<std::size_t>{*o.train_size} : o.config.train_sizes;
    opts.include_deterministic = o.deterministic_ablation && t == Treatment::delayed;
    opts.baseline_l2 = o.config.baseline_l2;
    const LearningCurve curve =
        learning_curve(data.records, posterior, t, opts, o.config.split, o.config.nudge);
    for (const auto& w : curve.warnings) log << "learning-curve: " << w << '\n';
    for (const auto& r : curve.rows) {
      out << to_string(t) << ',' << r.size << ',' << r.method << ',' << r.run_seed << ',' << fmt(r.nll)
          << ',' << fmt(r.accuracy) << ',' << fmt(r.f1) << ',' << r.n_subjects << '\n';
    }
    log << "learning-curve: " << to_string(t) << " " << curve.rows.size() << " rows\n";
  }
  write_file(o.out_dir / "learning_curve.csv", out.str());
}

std::vector<NudgeBranch> branches_for(Treatment t) {
  switch (t) {
    case Treatment::immediate: return {NudgeBranch::direct};
    case Treatment::delayed: return {NudgeBranch::affirm, NudgeBranch::contra};
    case Treatment::explanation: return {NudgeBranch::exp};
    case Treatment::independent: break;
  }
  return {};
}

void cmd_analyze(const PipelineOptions& o, const std::string& fp, std::ostream& log) {
  const fs::path root = o.out_dir / "nudge";
  require(fs::is_directory(root), ErrorKind::usage, "nudge fits missing: run fit-nudge first");
  std::vector<Treatment> treatments;
  if (o.treatment) {
    treatments.push_back(*o.treatment);
  } else {
    for (Treatment t : kAssisted) {
      if (fs::is_directory(root / std::string(to_string(t)))) treatments.push_back(t);
    }
  }
  std::ostringstream effects, groups_csv, tests;
  effects << csv_preamble(fp) << "subject_id,treatment,branch,crt_score,crt_group,signed_magnitude\n";
  groups_csv << csv_preamble(fp) << "treatment,branch,group,n,mean,ci_low,ci_high\n";
  tests << csv_preamble(fp)
        << "treatment,branch,test,comparison,statistic,df1,df2,p_value,degenerate\n";
  const CrtGroup all_groups[] = {CrtGroup::intuitive, CrtGroup::moderate, CrtGroup::reflective};

  for (Treatment t : treatments) {
    const fs::path dir = root / std::string(to_string(t));
    require(fs::is_directory(dir), ErrorKind::usage,
            "nudge fits missing for treatment " + std::string(to_string(t)));
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<std::pair<json, NudgeParams>> fits;
    for (const auto& f : files) {
      std::ifstream in(f);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        fail(ErrorKind::validation, "cannot parse " + f.string() + ": " + e.what());
      }
      fits.emplace_back(j, nudge_params_from_json(j.at("params")));
    }
    for (NudgeBranch b : branches_for(t)) {
      std::map<CrtGroup, std::vector<double>> grouped;
      for (const auto& [j, params] : fits) {
        const double value = effect_summary(params, b);
        const auto& crt = j.at("crt_score");
        effects << j.at("subject_id").get<std::string>() << ',' << to_string(t) << ',' << to_string(b)
                << ',';
        if (crt.is_null()) {
          effects << ",,";
        } else {
          const CrtGroup g = crt_group(crt.get<int>());
          grouped[g].push_back(value);
          effects << crt.get<int>() << ',' << to_string(g) << ',';
        }
        effects << fmt(value) << '\n';
      }
      std::vector<std::vector<double>> testable;
      std::vector<CrtGroup> labels;
      for (CrtGroup g : all_groups) {
        const auto& values = grouped[g];
        const GroupSummary s = summarize_group(values);
        groups_csv << to_string(t) << ',' << to_string(b) << ',' << to_string(g) << ',' << s.count << ','
                   << fmt(s.mean) << ',' << fmt(s.ci_low) << ',' << fmt(s.ci_high) << '\n';
        if (values.size() >= 2) {
          testable.push_back(values);
          labels.push_back(g);
        }
      }
      if (testable.size() < 2) {
        tests << to_string(t) << ',' << to_string(b) << ",anova,skipped,,,,,\n";
        log << "analyze: " << to_string(t) << '/' << to_string(b)
            << " skipped tests (fewer than 2 groups with >= 2 subjects)\n";
        continue;
      }
      const AnovaResult anova = one_way_anova(testable);
      tests << to_string(t) << ',' << to_string(b) << ",anova,all," << fmt(anova.f_statistic) << ','
            << anova.df_between << ',' << anova.df_within << ',' << fmt(anova.p_value) << ','
            << (anova.degenerate ? 1 : 0) << '\n';
      const auto pairs = pairwise_posthoc(
          testable, o.config.permutations,
          derive_seed(o.config.seed, fnv1a(std::string(to_string(t)) + "/" + std::string(to_string(b)))));
      for (const auto& c : pairs) {
        tests << to_string(t) << ',' << to_string(b) << ",posthoc_maxT,"
              << to_string(labels[c.pair.first]) << '-' << to_string(labels[c.pair.second]) << ','
              << fmt(c.mean_diff) << ",,," << fmt(c.p_value) << ",0\n";
      }
    }
    log << "analyze: " << to_string(t) << " " << fits.size() << " subjects\n";
  }
  write_file(o.out_dir / "analysis_effects.csv", effects.str());
  write_file(o.out_dir / "analysis_groups.csv", groups_csv.str());
  write_file(o.out_dir / "analysis_tests.csv", tests.str());
}

}  // namespace

Command parse_command(std::string_view name) {
  if (name == "fit-population") return Command::fit_population;
  if (name == "fit-nudge") return Command::fit_nudge;
  if (name == "evaluate") return Command::evaluate;
  if (name == "learning-curve") return Command::learning_curve;
  if (name == "analyze") return Command::analyze;
  if (name == "simulate") return Command::simulate;
  fail(ErrorKind::usage, "unknown command '" + std::string(name) + "'");
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::fit_population: return "fit-population";
    case Command::fit_nudge: return "fit-nudge";
    case Command::evaluate: return "evaluate";
    case Command::learning_curve: return "learning-curve";
    case Command::analyze: return "analyze";
    case Command::simulate: return "simulate";
  }
  return "simulate";
}

PopulationPosterior load_population(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::usage,
          "population posterior missing: " + path.string() + " (run fit-population first)");
  json j;
  try {
    in >> j;
    return PopulationPosterior(j.at("mean").get<std::vector<double>>(),
                               j.at("variance").get<std::vector<double>>(),
                               j.at("ensemble_size").get<std::size_t>(),
                               j.at("seed").get<std::uint64_t>(), j.at("use_bias").get<bool>());
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, "cannot parse population posterior " + path.string() + ": " + e.what());
  }
}

void execute(Command command, const PipelineOptions& options, std::ostream& log) {
  options.config.validate();
  const std::string fp = config_fingerprint(options.config);
  switch (command) {
    case Command::simulate: cmd_simulate(options, fp, log); break;
    case Command::fit_population: cmd_fit_population(options, fp, log); break;
    case Command::fit_nudge: cmd_fit_nudge(options, fp, log); break;
    case Command::evaluate: cmd_evaluate(options, fp, log); break;
    case Command::learning_curve: cmd_learning_curve(options, fp, log); break;
    case Command::analyze: cmd_analyze(options, fp, log); break;
  }
}

int run_pipeline(Command command, const PipelineOptions& options, std::ostream& log,
                 std::ostream& err) {
  try {
    execute(command, options, log);
    return 0;
  } catch (const Error& e) {
    err << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return e.kind() == ErrorKind::numeric ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "error[usage]: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nudgelab
