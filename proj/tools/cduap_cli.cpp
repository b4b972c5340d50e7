// Command-line front end: gen-data, train, craft, eval, sweep, ablate,
// transfer, export-viz. Artifacts live in the --out directory.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cduap/attack.hpp"
#include "cduap/config.hpp"
#include "cduap/errors.hpp"
#include "cduap/eval.hpp"
#include "cduap/io.hpp"
#include "cduap/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cduap;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> settings;
  std::string out;
  bool quiet = false;
};

struct VizOptions {
  std::string pert;
  std::size_t side = 0;
  double amplification = 10.0;
  int channels = 1;
};

struct Context {
  ExperimentConfig config;
  fs::path out;
  bool quiet = false;

  fs::path file(const char* name) const { return out / name; }

  void say(const std::string& line) const {
    if (!quiet) std::cout << line << "\n";
  }
};

Context resolve(const CommonOptions& opts) {
  Context ctx;
  if (!opts.config_path.empty()) {
    if (!fs::exists(opts.config_path)) throw UsageError("config file not found: " + opts.config_path);
    ctx.config = parse_config(read_file(opts.config_path));
  }
  for (const std::string& s : opts.settings) apply_setting(ctx.config, s);
  if (!opts.out.empty()) ctx.config.out = opts.out;
  ctx.out = ctx.config.out;
  ctx.quiet = opts.quiet;
  fs::create_directories(ctx.out);
  write_file(ctx.file("config.txt"), format_config(ctx.config));
  return ctx;
}

void require_file(const fs::path& path, const char* produced_by) {
  if (!fs::exists(path)) {
    throw DataError("missing " + path.string() + " (run '" + produced_by + "' first)");
  }
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string summary(const EvalReport& r) {
  if (!r.delta_aad) return "aad_t=" + fixed2(r.aad_t) + " (all classes targeted)";
  return "delta_aad=" + fixed2(*r.delta_aad) + " aad_t=" + fixed2(r.aad_t) + " aad_nt=" + fixed2(*r.aad_nt);
}

std::string model_label(const MlpClassifier& m) { return "mlp-seed" + std::to_string(m.seed); }

void write_reports(const Context& ctx, const std::string& stem, const std::vector<ReportRow>& rows) {
  write_file(ctx.file((stem + ".csv").c_str()), report_csv(rows));
  write_file(ctx.file((stem + ".json").c_str()), report_json(rows));
}

ClassPartition partition_for(const Context& ctx) {
  return parse_class_spec(ctx.config.attack.class_spec, ctx.config.data.classes);
}

void cmd_gen_data(const Context& ctx) {
  const auto [train, test] = make_datasets(ctx.config.data);
  save_dataset(train, ctx.file("train.data"));
  save_dataset(test, ctx.file("test.data"));
  ctx.say("gen-data: " + std::to_string(train.size()) + " train / " + std::to_string(test.size()) +
          " test samples, d=" + std::to_string(train.dim()) + ", C=" + std::to_string(train.num_classes));
}

void cmd_train(const Context& ctx) {
  require_file(ctx.file("train.data"), "gen-data");
  require_file(ctx.file("test.data"), "gen-data");
  const LabeledDataset train = load_dataset(ctx.file("train.data"));
  const LabeledDataset test = load_dataset(ctx.file("test.data"));
  const TrainResult result = train_victim(ctx.config, train, test, ctx.config.model.seed);
  save_model(result.model, ctx.file("model.txt"));
  std::string history = "epoch,loss,train_acc,test_acc\n";
  for (const EpochRecord& e : result.history) {
    history += std::to_string(e.epoch) + "," + format_exact(e.mean_loss) + "," + format_exact(e.train_accuracy) +
               "," + format_exact(e.test_accuracy) + "\n";
  }
  write_file(ctx.file("train_history.csv"), history);
  const double acc = result.history.empty() ? classification_accuracy(result.model, test)
                                            : result.history.back().test_accuracy;
  ctx.say("train: test accuracy " + fixed2(100.0 * acc) + "%");
}

struct Loaded {
  MlpClassifier model;
  LabeledDataset train;
  LabeledDataset test;
};

Loaded load_inputs(const Context& ctx, bool need_train) {
  require_file(ctx.file("model.txt"), "train");
  require_file(ctx.file("test.data"), "gen-data");
  Loaded in;
  in.model = load_model(ctx.file("model.txt"));
  in.test = load_dataset(ctx.file("test.data"));
  if (need_train) {
    require_file(ctx.file("train.data"), "gen-data");
    in.train = load_dataset(ctx.file("train.data"));
  }
  return in;
}

std::string experiment_name(const ClassPartition& p) { return p.all_targeted() ? "ac-uap" : "cd-uap"; }

void cmd_craft(const Context& ctx) {
  const Loaded in = load_inputs(ctx, true);
  const ClassPartition partition = partition_for(ctx);
  const LabeledDataset filtered = filter_correct(in.model, in.train);
  const CraftResult crafted = craft_cd_uap(in.model, filtered, ctx.config.attack);
  for (const std::string& w : crafted.warnings) std::cerr << "warning: " << w << "\n";
  save_perturbation(crafted.perturbation, ctx.file("pert.txt"));
  write_file(ctx.file("log.csv"), iteration_log_csv(crafted.log));
  const EvalReport report = evaluate_perturbation(in.model, in.test, partition, crafted.perturbation.delta);
  write_reports(ctx, "report",
                {make_report_row(experiment_name(partition), model_label(in.model), ctx.config.attack, report)});
  ctx.say("craft: " + summary(report));
}

void cmd_eval(const Context& ctx, const std::string& pert_path) {
  const Loaded in = load_inputs(ctx, false);
  const fs::path pert_file = pert_path.empty() ? ctx.file("pert.txt") : fs::path(pert_path);
  require_file(pert_file, "craft");
  const Perturbation pert = load_perturbation(pert_file);
  const ClassPartition partition = partition_for(ctx);
  const EvalReport report = evaluate_perturbation(in.model, in.test, partition, pert.delta);
  write_reports(ctx, "report",
                {make_report_row(experiment_name(partition), model_label(in.model), ctx.config.attack, report)});
  ctx.say("eval: " + summary(report));
}

void cmd_sweep(const Context& ctx) {
  const Loaded in = load_inputs(ctx, true);
  const ClassPartition partition = partition_for(ctx);
  const auto cells = loss_matrix_sweep(in.model, in.train, in.test, partition, ctx.config.attack);
  std::vector<ReportRow> rows;
  for (const ExperimentCell& cell : cells) {
    if (!cell.report) {
      std::cerr << "warning: sweep cell " << cell.label << " failed: " << cell.error << "\n";
      continue;
    }
    rows.push_back(make_report_row("sweep", model_label(in.model), cell.config, *cell.report));
    ctx.say("sweep " + cell.label + ": " + summary(*cell.report));
  }
  write_reports(ctx, "sweep", rows);
}

void cmd_ablate(const Context& ctx) {
  const Loaded in = load_inputs(ctx, true);
  const ClassPartition partition = partition_for(ctx);
  const auto cells = ablation_sampling(in.model, in.train, in.test, partition, ctx.config.attack);
  std::vector<ReportRow> rows;
  for (const ExperimentCell& cell : cells) {
    if (!cell.report) {
      std::cerr << "warning: ablation row " << cell.label << " failed: " << cell.error << "\n";
      continue;
    }
    rows.push_back(make_report_row("ablation:" + cell.label, model_label(in.model), cell.config, *cell.report));
    ctx.say("ablate " + cell.label + ": " + summary(*cell.report));
  }
  write_reports(ctx, "ablation", rows);
}

void cmd_transfer(const Context& ctx) {
  require_file(ctx.file("train.data"), "gen-data");
  require_file(ctx.file("test.data"), "gen-data");
  const LabeledDataset train = load_dataset(ctx.file("train.data"));
  const LabeledDataset test = load_dataset(ctx.file("test.data"));
  if (ctx.config.transfer_seeds.empty()) throw UsageError("config field 'transfer.seeds' is empty");
  std::vector<MlpClassifier> models;
  for (std::uint64_t seed : ctx.config.transfer_seeds) {
    models.push_back(train_victim(ctx.config, train, test, seed).model);
    save_model(models.back(), ctx.out / ("model_seed" + std::to_string(seed) + ".txt"));
  }
  const ClassPartition partition = partition_for(ctx);
  const TransferMatrix matrix = transfer_matrix(models, models, train, test, partition, ctx.config.attack);
  std::vector<ReportRow> rows;
  for (const TransferCell& cell : matrix.cells) {
    const std::string label = model_label(models[cell.source]) + "->" + model_label(models[cell.target]);
    rows.push_back(make_report_row(cell.white_box ? "transfer-whitebox" : "transfer", label, ctx.config.attack,
                                   cell.report));
    ctx.say("transfer " + label + (cell.white_box ? " (white-box)" : "") + ": " + summary(cell.report));
  }
  write_reports(ctx, "transfer", rows);
}

void cmd_export_viz(const Context& ctx, const VizOptions& viz) {
  const fs::path pert_file = viz.pert.empty() ? ctx.file("pert.txt") : fs::path(viz.pert);
  require_file(pert_file, "craft");
  const Perturbation pert = load_perturbation(pert_file);
  std::size_t side = viz.side;
  if (side == 0 && viz.channels == 1) {
    side = padded_side(pert.delta.size());
  } else if (side == 0) {
    side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(pert.delta.size() / 3))));
  }
  write_file(ctx.file("pert.ppm"),
             perturbation_ppm(pert, side, viz.amplification, viz.channels, ctx.config.data.bounds));
  ctx.say("export-viz: wrote " + ctx.file("pert.ppm").string());
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config file (key=value lines)");
  cmd->add_option("--set", opts.settings, "Override one config field, e.g. --set attack.eps=0.1")->take_all();
  cmd->add_option("--out", opts.out, "Output directory (overrides the config's 'out')");
  cmd->add_flag("--quiet", opts.quiet, "Suppress the summary line");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-discriminative universal adversarial perturbations on synthetic benchmarks"};
  app.require_subcommand(1);
  CommonOptions opts;
  VizOptions viz;
  std::string eval_pert;

  auto* gen = app.add_subcommand("gen-data", "Generate and split the configured dataset");
  auto* train = app.add_subcommand("train", "Train the victim classifier");
  auto* craft = app.add_subcommand("craft", "Craft a perturbation and evaluate it on the test split");
  auto* eval = app.add_subcommand("eval", "Evaluate a perturbation file");
  auto* sweep = app.add_subcommand("sweep", "Loss-function matrix (3 x 4)");
  auto* ablate = app.add_subcommand("ablate", "Batch sampling and loss weighting ablation");
  auto* transfer = app.add_subcommand("transfer", "Transferability matrix over independently seeded models");
  auto* export_viz = app.add_subcommand("export-viz", "Write the perturbation as an amplified PPM image");
  for (auto* cmd : {gen, train, craft, eval, sweep, ablate, transfer, export_viz}) add_common(cmd, opts);
  eval->add_option("--pert", eval_pert, "Perturbation file (default <out>/pert.txt)");
  export_viz->add_option("--pert", viz.pert, "Perturbation file (default <out>/pert.txt)");
  export_viz->add_option("--side", viz.side, "Image side length (default: inferred)");
  export_viz->add_option("--amp", viz.amplification, "Amplification factor");
  export_viz->add_option("--channels", viz.channels, "1 (grayscale) or 3 (RGB)")->check(CLI::IsMember({1, 3}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const Context ctx = resolve(opts);
    if (*gen) cmd_gen_data(ctx);
    if (*train) cmd_train(ctx);
    if (*craft) cmd_craft(ctx);
    if (*eval) cmd_eval(ctx, eval_pert);
    if (*sweep) cmd_sweep(ctx);
    if (*ablate) cmd_ablate(ctx);
    if (*transfer) cmd_transfer(ctx);
    if (*export_viz) cmd_export_viz(ctx, viz);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
