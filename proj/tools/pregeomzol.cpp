// pregeomzol: experiments over random (strongly) l-colourable structures
// with an underlying pregeometry.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "pregeomzol/harness.hpp"

using namespace pregeomzol;

int main(int argc, char** argv) {
  CLI::App app{"workbench for colourable structures over finite pregeometries"};
  app.set_version_flag("--version", std::string("pregeomzol ") + tool_version());
  app.require_subcommand(1);

  std::string config_path, out_dir, colour_rule, kind;
  std::uint64_t seed = 0, samples = 0;
  unsigned q = 0, n = 0, l = 0, n_lo = 0, n_hi = 0, target_rank = 0, n_max = 0,
           ambient_rank = 0;
  bool strong = false, symmetric = false;
  std::string event_type, event_sexpr, input_path;

  const std::vector<std::string> subcommands = {
      "enumerate", "sample",  "check-xi",       "zero-one", "unique-colouring",
      "ramsey-min-dim", "ext-axiom", "find-u", "validate"};
  for (const std::string& name : subcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON; a manifest also works)");
    sub->add_option("--seed", seed, "override the run seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--samples", samples, "override the sample count");
    sub->add_option("--kind", kind, "pregeometry kind: trivial|linear|affine|projective");
    sub->add_option("--q", q, "field order (prime)");
    sub->add_option("--n", n, "family index (dimension)");
    sub->add_option("--l", l, "number of colours");
    sub->add_option("--n-lo", n_lo, "range start for per-n experiments");
    sub->add_option("--n-hi", n_hi, "range end for per-n experiments");
    sub->add_option("--target-rank", target_rank, "ramsey: monochromatic flat rank");
    sub->add_option("--n-max", n_max, "ramsey: search bound");
    sub->add_option("--ambient-rank", ambient_rank, "weak-case pipeline ambient rank");
    sub->add_option("--event", event_type, "zero-one event: relations_nonempty|formula|tautology");
    sub->add_option("--formula", event_sexpr, "event formula as an s-expression");
    sub->add_option("--input", input_path, "structure file for validate");
    sub->add_option("--colour-rule", colour_rule, "closure|tuple (default closure)");
    sub->add_flag("--strong", strong, "strong colourings");
    sub->add_flag("--symmetric-irreflexive", symmetric,
                  "interpret all relation symbols as symmetric and irreflexive");
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();

  ExperimentSpec spec;
  try {
    if (!config_path.empty())
      spec = spec_from_json(Json::parse(read_file(config_path)));
    spec.experiment = sub->get_name();
    if (seed) spec.cfg.seed = seed;
    if (samples) spec.cfg.samples = samples;
    if (!out_dir.empty()) spec.out_dir = out_dir;
    if (!kind.empty()) spec.cfg.kind = kind_from_name(kind);
    if (q) spec.cfg.q = q;
    if (n) spec.cfg.n = n;
    if (l) spec.cfg.l = l;
    if (n_lo) spec.n_lo = n_lo;
    if (n_hi) spec.n_hi = n_hi;
    if (target_rank) spec.target_rank = target_rank;
    if (n_max) spec.n_max = n_max;
    if (ambient_rank) spec.ambient_rank = ambient_rank;
    if (!event_type.empty()) spec.event_type = event_type;
    if (!event_sexpr.empty()) {
      spec.event_sexpr = event_sexpr;
      spec.event_type = "formula";
    }
    if (!input_path.empty()) spec.input_path = input_path;
    if (!colour_rule.empty()) spec.cfg.rule = colour_rule_from_name(colour_rule);
    if (strong) spec.cfg.strong = true;
    if (symmetric)
      spec.cfg.vocab = Vocabulary(spec.cfg.vocab.symbols, true);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  return run(spec);
}
