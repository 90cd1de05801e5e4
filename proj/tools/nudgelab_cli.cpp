// nudgelab: command-line front end for the modeling pipeline.

#include <iostream>
#include <utility>
#include <string>

#include "CLI11.hpp"
#include "nudgelab/config.hpp"
#include "nudgelab/error.hpp"
#include "nudgelab/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::string data;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string treatment;
  std::optional<std::size_t> train_size;
  bool skip_invalid = false;
  bool deterministic_ablation = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--data", f.data, "behavior CSV (default <out>/behavior.csv)");
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--seed", f.seed, "overrides the configured seed");
  sub->add_option("--treatment", f.treatment, "independent|immediate|delayed|explanation");
  sub->add_option("--train-size", f.train_size, "absolute per-subject training size");
  sub->add_flag("--skip-invalid", f.skip_invalid, "drop invalid rows instead of failing");
  sub->add_flag("--deterministic-ablation", f.deterministic_ablation,
                "single point model in place of the posterior ensemble (delayed only)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nudgelab: population posterior and nudge models of AI-assisted decisions"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "write a synthetic study to <out>/behavior.csv"},
      {"fit-population", "fit the population posterior on independent-treatment decisions"},
      {"fit-nudge", "fit per-subject nudge parameters on all of each subject's trials"},
      {"evaluate", "per-subject train/test comparison against the logistic baseline"},
      {"learning-curve", "test NLL and F1 across absolute training sizes"},
      {"analyze", "effects by CRT group, one-way ANOVA and permutation post-hoc"},
  };
  for (const auto& [name, about] : commands) add_common(app.add_subcommand(name, about), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  using namespace nudgelab;
  try {
    const Command command = parse_command(app.get_subcommands().front()->get_name());
    PipelineOptions opts;
    if (!flags.config.empty()) opts.config = load_run_config(flags.config);
    if (flags.seed) opts.config.seed = *flags.seed;
    opts.config.synchronize();
    if (!flags.data.empty()) opts.data_path = flags.data;
    opts.out_dir = flags.out;
    if (!flags.treatment.empty()) opts.treatment = parse_treatment(flags.treatment);
    opts.train_size = flags.train_size;
    opts.skip_invalid = flags.skip_invalid;
    opts.deterministic_ablation = flags.deterministic_ablation;
    return run_pipeline(command, opts, std::cout, std::cerr);
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return e.kind() == ErrorKind::numeric ? 2 : 1;
  }
}
