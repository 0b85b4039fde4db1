#include "commands.hpp"

#include <CLI11/CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ablation.hpp"
#include "dpaf/errors.hpp"
#include "dpaf/image_io.hpp"
#include "dpaf/net/checkpoint.hpp"
#include "dpaf/net/grad_suite.hpp"
#include "dpaf/objective/losses.hpp"
#include "dpaf/train/evaluate.hpp"
#include "run_config.hpp"

namespace dpaf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string data;
  std::string checkpoint;
  std::string input;
  std::string output;
  std::string resume;
  std::string scope = "all";
  std::string variants = "Full,AdditiveFusion";
  std::string seeds = "0,1,2";
  std::string loss_sets;
  std::uint64_t seed = 0;
  std::size_t n_pairs = 0;
  std::size_t max_steps = 0;
  std::size_t epochs = 0;
  bool identity = false;
};

RunConfig base_config(const Options& o) { return o.config.empty() ? RunConfig{} : load_run_config(o.config); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " '" + s + "'");
  }
}

rain::Manifest require_manifest(const std::string& path) {
  if (path.empty()) throw ConfigError("--data is required");
  if (!fs::exists(path)) throw ConfigError("dataset manifest '" + path + "' does not exist");
  return rain::read_manifest(path);
}

int cmd_gen_data(const Options& o, bool seed_given, std::ostream& out) {
  RunConfig cfg = base_config(o);
  if (seed_given) cfg.data.spec.seed = o.seed;
  if (o.n_pairs) cfg.data.spec.n_pairs = o.n_pairs;
  cfg.validate();
  const fs::path dir = o.out;
  rain::generate_dataset(cfg.data.spec, dir);
  write_json(dir / "effective_config.json", to_json(cfg));
  out << (dir / "manifest.json").string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, bool seed_given, std::ostream& out) {
  RunConfig cfg = base_config(o);
  if (seed_given) cfg.seed = cfg.train.seed = o.seed;
  if (o.max_steps) cfg.train.max_steps = o.max_steps;
  if (o.epochs) cfg.train.schedule.total_epochs = o.epochs;
  cfg.validate();
  const auto manifest = require_manifest(o.data);
  const fs::path dir = o.out;
  fs::create_directories(dir);
  write_json(dir / "effective_config.json", to_json(cfg));

  net::Model<float> model(cfg.model, cfg.seed);
  train::Trainer trainer(model, rain::load_samples(manifest), cfg.train);
  const fs::path trace_path = dir / "loss_trace.jsonl";
  std::vector<train::StepRecord> kept;
  if (!o.resume.empty()) {
    trainer.restore(nn::Container::read(o.resume));
    if (fs::exists(trace_path)) {
      for (const auto& r : train::read_trace(trace_path)) {
        if (r.step < trainer.step()) kept.push_back(r);
      }
    }
    out << "resumed at step " << trainer.step() << '\n';
  }
  std::ofstream trace(trace_path, std::ios::trunc);
  if (!trace) throw IoError(trace_path.string(), "cannot open for writing");
  for (const auto& r : kept) train::write_trace_line(trace, r);

  train::TrainHooks hooks;
  hooks.checkpoint_dir = dir / "checkpoints";
  const std::size_t report_every = std::max<std::size_t>(1, trainer.steps_per_epoch());
  hooks.on_step = [&](const train::StepRecord& r) {
    train::write_trace_line(trace, r);
    if ((r.step + 1) % report_every == 0 || r.step + 1 == trainer.total_steps()) {
      char line[160];
      std::snprintf(line, sizeof line, "step %zu/%zu epoch %zu lr %.3g loss %.6f", r.step + 1,
                    trainer.total_steps(), r.epoch, r.lr, r.loss.total);
      out << line << '\n' << std::flush;
    }
  };
  train::run_training(trainer, hooks);
  trace.flush();
  net::save_model(dir / "model.ckpt", model);
  out << "wrote " << (dir / "model.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("--out is required");
  if (!o.identity && o.checkpoint.empty()) throw ConfigError("--checkpoint is required unless --identity is given");
  const auto manifest = require_manifest(o.data);
  const auto samples = rain::load_samples(manifest);
  json effective = {{"command", "eval"}, {"data", o.data}, {"identity", o.identity}};
  objective::SsimConfig ssim_cfg;
  if (!o.config.empty()) ssim_cfg = load_run_config(o.config).train.ssim;
  effective["ssim"] = objective::to_json(ssim_cfg);
  train::MetricReport report;
  if (o.identity) {
    report = train::evaluate(samples, train::identity_predictor(), ssim_cfg);
  } else {
    const auto model = net::load_model<float>(o.checkpoint);
    effective["checkpoint"] = o.checkpoint;
    effective["model"] = net::to_json(model.config());
    report = train::evaluate(samples, train::model_predictor(model), ssim_cfg);
  }
  write_json(o.out, train::to_json(report));
  write_json(o.out + ".config.json", effective);
  char line[160];
  std::snprintf(line, sizeof line, "%zu pairs: mean PSNR %.3f dB (median %.3f), mean SSIM %.4f (median %.4f)",
                report.rows.size(), report.mean_psnr, report.median_psnr, report.mean_ssim, report.median_ssim);
  out << line << '\n';
  return kExitOk;
}

int cmd_derain(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty() || o.input.empty() || o.output.empty()) {
    throw ConfigError("derain needs --checkpoint, --input and --output");
  }
  if (!fs::exists(o.input)) throw ConfigError("input image '" + o.input + "' does not exist");
  const auto model = net::load_model<float>(o.checkpoint);
  const auto image = read_png(o.input);
  bool padded = false;
  const auto result = train::derain(model, image, &padded);
  write_png(o.output, result);
  write_json(o.output + ".config.json", {{"command", "derain"},
                                         {"checkpoint", o.checkpoint},
                                         {"input", o.input},
                                         {"output", o.output},
                                         {"model", net::to_json(model.config())}});
  const double change = objective::psnr(quantize_image(result), image);
  char line[200];
  std::snprintf(line, sizeof line, "%zux%zu, padding %s, PSNR(output vs input) %.3f dB", image.dim(1),
                image.dim(2), padded ? "applied" : "not needed", change);
  out << line << '\n';
  return kExitOk;
}

int cmd_grad_check(const Options& o, std::ostream& out) {
  const auto rows = net::run_grad_check(o.scope, o.seed);
  bool ok = true;
  char line[200];
  std::snprintf(line, sizeof line, "%-22s %-36s %12s %10s  %s", "scope", "tensor", "rel_error", "tolerance",
                "result");
  out << line << '\n';
  json table = json::array();
  for (const auto& r : rows) {
    ok = ok && r.pass();
    std::snprintf(line, sizeof line, "%-22s %-36s %12.3e %10.0e  %s", r.scope.c_str(), r.tensor.c_str(),
                  r.rel_error, r.tolerance, r.pass() ? "pass" : "FAIL");
    out << line << '\n';
    table.push_back({{"scope", r.scope},
                     {"tensor", r.tensor},
                     {"rel_error", r.rel_error},
                     {"tolerance", r.tolerance},
                     {"elements", r.elements},
                     {"pass", r.pass()}});
  }
  out << (ok ? "all gradients match" : "gradient mismatch") << '\n';
  if (!o.out.empty()) {
    write_json(o.out, table);
    write_json(o.out + ".config.json", {{"command", "grad-check"}, {"scope", o.scope}, {"seed", o.seed}});
  }
  return ok ? kExitOk : kExitFailure;
}

int cmd_ablate(const Options& o, bool seed_given, std::ostream& out) {
  AblationOptions opt;
  opt.base = base_config(o);
  if (o.epochs) opt.base.train.schedule.total_epochs = o.epochs;
  if (o.max_steps) opt.base.train.max_steps = o.max_steps;
  opt.base.validate();
  for (const auto& v : split(o.variants, ',')) opt.variants.push_back(net::variant_from_string(v));
  if (seed_given) {
    opt.seeds = {o.seed};
  } else {
    for (const auto& s : split(o.seeds, ',')) opt.seeds.push_back(static_cast<std::uint64_t>(parse_number(s, "seed")));
  }
  for (const auto& set : split(o.loss_sets, ';')) {
    const auto w = split(set, ',');
    if (w.size() != 3) throw ConfigError("loss set '" + set + "' must list three weights (mse,ssim,perp)");
    objective::LossWeights lw{parse_number(w[0], "weight"), parse_number(w[1], "weight"),
                              parse_number(w[2], "weight")};
    lw.validate();
    opt.loss_sets.push_back(lw);
  }
  if (opt.variants.size() < 2 && opt.loss_sets.size() < 2) {
    throw ConfigError("ablate needs at least two variants or two loss sets");
  }
  const fs::path dir = o.out;
  fs::create_directories(dir);
  rain::Manifest manifest;
  if (o.data.empty()) {
    manifest = rain::generate_dataset(opt.base.data.spec, dir / "data");
    manifest.directory = dir / "data";
  } else {
    manifest = require_manifest(o.data);
  }
  json effective = to_json(opt.base);
  effective["ablation"] = {{"variants", split(o.variants, ',')}, {"seeds", opt.seeds}};
  write_json(dir / "effective_config.json", effective);
  opt.log = [&](const std::string& line) { out << line << '\n' << std::flush; };
  const auto table = run_ablation(opt, rain::load_samples(manifest));
  write_json(dir / "ablation.json", to_json(table));
  const std::string md = format_table(table);
  std::ofstream(dir / "ablation.md") << md;
  out << md;
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-path attention-fusion deraining: data, training, evaluation and checks", "dpaf"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic rainy/clean dataset");
  gen->add_option("--config", o.config, "Run config (JSON); the data section is used");
  gen->add_option("--out", o.out, "Output directory")->required();
  auto* gen_seed = gen->add_option("--seed", o.seed, "Dataset seed (overrides data.seed)");
  gen->add_option("--n-pairs", o.n_pairs, "Number of pairs (overrides data.n_pairs)");

  auto* tr = app.add_subcommand("train", "Train a model on a dataset manifest");
  tr->add_option("--config", o.config, "Run config (JSON)");
  tr->add_option("--data", o.data, "Dataset manifest.json");
  tr->add_option("--out", o.out, "Run directory (trace, checkpoints, model.ckpt)")->required();
  auto* tr_seed = tr->add_option("--seed", o.seed, "Model/training seed (overrides seed)");
  tr->add_option("--resume", o.resume, "Continue from a checkpoint written by an earlier run");
  tr->add_option("--max-steps", o.max_steps, "Stop after this many steps");
  tr->add_option("--epochs", o.epochs, "Schedule length in epochs (overrides schedule.total_epochs)");

  auto* ev = app.add_subcommand("eval", "Score a checkpoint on a dataset (PSNR/SSIM)");
  ev->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
  ev->add_option("--data", o.data, "Dataset manifest.json");
  ev->add_option("--out", o.out, "Report file (JSON)");
  ev->add_option("--config", o.config, "Run config; only loss.ssim is used");
  ev->add_flag("--identity", o.identity, "Score the rainy inputs themselves instead of a model");

  auto* dr = app.add_subcommand("derain", "Derain one PNG image of any size");
  dr->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  dr->add_option("--input", o.input, "Input PNG")->required();
  dr->add_option("--output", o.output, "Output PNG")->required();

  auto* gc = app.add_subcommand("grad-check", "Finite-difference gradient checks");
  gc->add_option("--scope", o.scope, "Block name or 'all'");
  auto* gc_seed = gc->add_option("--seed", o.seed, "Seed for weights and inputs");
  gc->add_option("--out", o.out, "Optional JSON table");

  auto* ab = app.add_subcommand("ablate", "Train and compare variants / loss weightings across seeds");
  ab->add_option("--config", o.config, "Run config (JSON)");
  ab->add_option("--data", o.data, "Dataset manifest.json (generated from the config when omitted)");
  ab->add_option("--out", o.out, "Output directory")->required();
  ab->add_option("--variants", o.variants, "Comma-separated: Full, OnlyCNN, OnlyTransformer, AdditiveFusion");
  ab->add_option("--seeds", o.seeds, "Comma-separated training seeds");
  auto* ab_seed = ab->add_option("--seed", o.seed, "Single training seed (overrides --seeds)");
  ab->add_option("--loss-sets", o.loss_sets, "Semicolon-separated mse,ssim,perp weight triples");
  ab->add_option("--epochs", o.epochs, "Epochs per run (overrides schedule.total_epochs)");
  ab->add_option("--max-steps", o.max_steps, "Cap on steps per run");

  gc_seed->default_val(1);
  o.seed = 0;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(o, gen_seed->count() > 0, out);
    if (*tr) return cmd_train(o, tr_seed->count() > 0, out);
    if (*ev) return cmd_eval(o, out);
    if (*dr) return cmd_derain(o, out);
    if (*gc) {
      if (gc_seed->count() == 0) o.seed = 1;
      return cmd_grad_check(o, out);
    }
    if (*ab) return cmd_ablate(o, ab_seed->count() > 0, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LookupError& e) {
    err << "lookup error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace dpaf::cli
