#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scbnet/arch.hpp"
#include "scbnet/checkpoint.hpp"
#include "scbnet/data.hpp"
#include "scbnet/errors.hpp"
#include "scbnet/gradcheck_suite.hpp"
#include "scbnet/image_io.hpp"
#include "scbnet/report.hpp"
#include "scbnet/train.hpp"

namespace fs = std::filesystem;
using namespace scbnet;

namespace {

// `--arch` takes a registry id or a path to a JSON architecture config.
NetworkSpec resolve_arch(const std::string& arch, int resolution,
                         bool resolution_set) {
  if (fs::is_regular_file(arch)) {
    NetworkSpec spec = load_spec_file(arch);
    if (resolution_set) spec.input_resolution = resolution;
    spec.validate();
    return spec;
  }
  return build_architecture(arch, resolution);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

struct TrainArgs {
  std::string arch = "arch-1";
  std::string train_data;
  int resolution = 64;
  bool resolution_set = false;
  int epochs = 60;
  int batch_size = 15;
  double lr = 1e-3;
  std::string optimizer = "adam";
  uint64_t seed = 0;
  bool augment = false;
  std::string out;
  std::string history;
};

void run_train(const TrainArgs& a) {
  const NetworkSpec spec = resolve_arch(a.arch, a.resolution, a.resolution_set);
  IngestReport report;
  const LabeledDataset data =
      ingest_directory(a.train_data, spec.input_resolution, &report);
  std::cout << report.to_text();

  TrainConfig cfg;
  cfg.batch_size = a.batch_size;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.learning_rate = static_cast<float>(a.lr);
  cfg.optimizer = optimizer_from_name(a.optimizer);
  cfg.augment = a.augment;

  const TrainResult result =
      train(spec, data, cfg, [&cfg](int epoch, const EpochStats& s) {
        std::printf("epoch %d/%d  loss %.6f  train_acc %.4f  (%.1fs)\n", epoch,
                    cfg.epochs, s.mean_loss, s.train_accuracy, s.seconds);
        std::fflush(stdout);
      });

  save_model(spec, result.params, a.out);
  const std::string history_path =
      a.history.empty() ? a.out + ".history.csv" : a.history;
  write_text_file(history_path, history_csv(result.history));
  std::cout << "saved model to " << a.out << ", history to " << history_path
            << "\n";
}

struct EvalArgs {
  std::string model;
  std::string test_data;
  std::string append;
  int resolution = 0;
  bool resolution_set = false;
};

void run_eval(const EvalArgs& a) {
  LoadedModel model = load_model(a.model);
  if (a.resolution_set) model.spec.input_resolution = a.resolution;
  const LabeledDataset data =
      ingest_directory(a.test_data, model.spec.input_resolution);
  const EvalResult r = evaluate(model.spec, model.params, data);
  std::cout << "accuracy " << format_accuracy_pct(r.accuracy * 100.0) << "\n";
  std::cout << "tp " << r.tp << "  tn " << r.tn << "  fp " << r.fp << "  fn "
            << r.fn << "  n " << r.n << "\n";
  if (!a.append.empty()) {
    const bool fresh = !fs::exists(a.append) || fs::file_size(a.append) == 0;
    std::ofstream out(a.append, std::ios::app);
    if (!out) throw ConfigError("cannot open '" + a.append + "' for appending");
    if (fresh) out << "model,test_data,n,tp,tn,fp,fn,accuracy_pct\n";
    out << a.model << "," << a.test_data << "," << r.n << "," << r.tp << ","
        << r.tn << "," << r.fp << "," << r.fn << ","
        << format_accuracy_pct(r.accuracy * 100.0) << "\n";
  }
}

struct SweepArgs {
  std::string train_data, test_data;
  int resolution = 64;
  int epochs = 60;
  int batch_size = 15;
  double lr = 1e-3;
  std::string optimizer = "adam";
  uint64_t seed = 0;
  bool dry_run = false;
  std::string out;
  std::string csv;
  int workers = 0;
};

void run_sweep_cmd(const SweepArgs& a) {
  if (!a.dry_run && (a.train_data.empty() || a.test_data.empty())) {
    throw CLI::RequiredError("--train-data and --test-data (without --dry-run)");
  }
  SweepOptions o;
  o.train_dir = a.train_data;
  o.test_dir = a.test_data;
  o.resolution = a.resolution;
  o.base.batch_size = a.batch_size;
  o.base.epochs = a.epochs;
  o.base.learning_rate = static_cast<float>(a.lr);
  o.base.optimizer = optimizer_from_name(a.optimizer);
  o.master_seed = a.seed;
  o.dry_run = a.dry_run;
  o.workers = a.workers;
  o.on_cell = [](const SweepCell& cell) {
    std::printf("cell %s aug=%s  accuracy %s\n", cell.arch_id.c_str(),
                cell.augmented ? "yes" : "no",
                format_accuracy_pct(*cell.accuracy_pct).c_str());
    std::fflush(stdout);
  };
  const SweepResult result = run_sweep(o);
  const std::string text = "Table 1\n\n" + render_table1(result) +
                           "\nTable 2\n\n" + render_table2(result);
  std::cout << text;
  if (!a.out.empty()) write_text_file(a.out, text);
  if (!a.csv.empty()) write_text_file(a.csv, sweep_csv(result));
}

struct GradcheckArgs {
  double tolerance = 0.0;
  bool tolerance_set = false;
  double step = 0.0;
  bool step_set = false;
  bool float64 = false;
  bool inject_fault = false;
  bool primitives_only = false;
  uint64_t seed = 0;
};

template <class T>
bool run_gradcheck_suite(const GradcheckArgs& a) {
  const double tol =
      a.tolerance_set ? a.tolerance : default_gradcheck_tolerance(a.float64);
  const double step =
      a.step_set ? a.step : default_gradcheck_step(a.float64);
  // whole networks are probed in double precision at every build width: a
  // float objective cannot resolve its own gradients through this many
  // layers (rounding noise and gate flips inside the probe interval swamp
  // the quotient), and the backward code is the same template either way
  const double net_step = a.step_set ? a.step : default_gradcheck_step(true);

  std::vector<SuiteCheck> checks = gradcheck_primitives<T>(step, tol, a.seed);
  if (a.inject_fault) {
    checks.push_back(gradcheck_conv2d<T>(step, tol, a.seed, true));
  }
  std::vector<std::string> skipped;
  if (!a.primitives_only) {
    for (const std::string& id : registry_ids()) {
      try {
        checks.push_back(gradcheck_network<double>(id, net_step, tol, a.seed));
      } catch (const ResolutionError& e) {
        skipped.push_back(id + ": " + e.what());
      }
    }
  }
  bool all_ok = true;
  for (const auto& check : checks) {
    const bool ok = check.report.passed();
    all_ok = all_ok && ok;
    std::printf("%-24s %s  max rel err %.3g\n", check.name.c_str(),
                ok ? "ok  " : "FAIL", check.report.max_rel_err());
    if (!ok) std::fputs(check.report.summary().c_str(), stdout);
  }
  for (const auto& msg : skipped) {
    std::printf("%-24s skip (%s)\n", msg.substr(0, msg.find(':')).c_str(),
                msg.substr(msg.find(": ") + 2).c_str());
  }
  return all_ok;
}

struct PredictArgs {
  std::string model;
  std::vector<std::string> images;
};

void run_predict(const PredictArgs& a) {
  const LoadedModel model = load_model(a.model);
  const int r = model.spec.input_resolution;
  for (const std::string& path : a.images) {
    GrayImage gray = to_grayscale(decode_image_file(path));
    gray = resize_bilinear(gray, r, r);
    const Tensor4 input(1, 1, r, r, std::move(gray.pixels));
    const Tensor4 logits = network_infer(model.spec, model.params, input);
    const double prob = sigmoid(static_cast<double>(logits.data[0]));
    std::printf("%s  %.4f  %s\n", path.c_str(), prob,
                prob > 0.5 ? "tumor" : "no-tumor");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"brain-MRI tumor classifier: conv-block and skip-connection "
               "CNN family with train/eval/sweep tooling"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* cmd_train = app.add_subcommand("train", "train one architecture");
  cmd_train->add_option("--arch", train_args.arch,
                        "registry id (arch-1..arch-10) or JSON config path");
  cmd_train->add_option("--train-data", train_args.train_data,
                        "directory with yes/ and no/ image folders")
      ->required();
  auto* train_res = cmd_train->add_option("--resolution", train_args.resolution,
                                          "input resolution R (default 64)");
  cmd_train->add_option("--epochs", train_args.epochs, "training epochs");
  cmd_train->add_option("--batch-size", train_args.batch_size, "batch size");
  cmd_train->add_option("--lr", train_args.lr, "learning rate");
  cmd_train->add_option("--optimizer", train_args.optimizer, "adam or sgd");
  cmd_train->add_option("--seed", train_args.seed, "rng seed");
  cmd_train->add_flag("--augment", train_args.augment,
                      "train on originals plus horizontal and vertical flips");
  cmd_train->add_option("--out", train_args.out, "checkpoint output path")
      ->required();
  cmd_train->add_option("--history", train_args.history,
                        "history csv path (default <out>.history.csv)");
  cmd_train->callback([&]() {
    train_args.resolution_set = train_res->count() > 0;
    run_train(train_args);
  });

  EvalArgs eval_args;
  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  cmd_eval->add_option("--model", eval_args.model, "checkpoint path")
      ->required();
  cmd_eval->add_option("--test-data", eval_args.test_data,
                       "directory with yes/ and no/ image folders")
      ->required();
  cmd_eval->add_option("--append", eval_args.append,
                       "append a csv result row to this file");
  auto* eval_res = cmd_eval->add_option(
      "--resolution", eval_args.resolution,
      "override input resolution (default: the model's)");
  cmd_eval->callback([&]() {
    eval_args.resolution_set = eval_res->count() > 0;
    run_eval(eval_args);
  });

  SweepArgs sweep_args;
  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep", "train and evaluate every architecture with and without "
               "augmentation");
  cmd_sweep->add_option("--train-data", sweep_args.train_data,
                        "training data directory");
  cmd_sweep->add_option("--test-data", sweep_args.test_data,
                        "test data directory");
  cmd_sweep->add_option("--resolution", sweep_args.resolution,
                        "input resolution R");
  cmd_sweep->add_option("--epochs", sweep_args.epochs, "epochs per cell");
  cmd_sweep->add_option("--batch-size", sweep_args.batch_size, "batch size");
  cmd_sweep->add_option("--lr", sweep_args.lr, "learning rate");
  cmd_sweep->add_option("--optimizer", sweep_args.optimizer, "adam or sgd");
  cmd_sweep->add_option("--seed", sweep_args.seed,
                        "master seed; each cell derives its own");
  cmd_sweep->add_flag("--dry-run", sweep_args.dry_run,
                      "render the tables without training");
  cmd_sweep->add_option("--out", sweep_args.out, "also write the report here");
  cmd_sweep->add_option("--csv", sweep_args.csv, "write machine-readable csv");
  cmd_sweep->add_option("--workers", sweep_args.workers,
                        "parallel cells (capped by SCBNET_THREADS)");
  cmd_sweep->callback([&]() { run_sweep_cmd(sweep_args); });

  GradcheckArgs grad_args;
  bool grad_failed = false;
  CLI::App* cmd_gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of every layer primitive and "
                   "each architecture at miniature scale");
  auto* grad_tol = cmd_gradcheck->add_option(
      "--tolerance", grad_args.tolerance,
      "max relative error (default 1e-2, or 1e-5 with --float64)");
  auto* grad_step = cmd_gradcheck->add_option(
      "--step", grad_args.step,
      "finite-difference step (default 1e-3, or 1e-5 with --float64)");
  cmd_gradcheck->add_flag("--float64", grad_args.float64,
                          "run the suite in double precision");
  cmd_gradcheck->add_flag("--primitives-only", grad_args.primitives_only,
                          "skip the whole-network checks");
  cmd_gradcheck->add_flag("--inject-fault", grad_args.inject_fault,
                          "negate one analytic gradient block; the run must "
                          "then fail");
  cmd_gradcheck->add_option("--seed", grad_args.seed, "rng seed");
  cmd_gradcheck->callback([&]() {
    grad_args.tolerance_set = grad_tol->count() > 0;
    grad_args.step_set = grad_step->count() > 0;
    const bool ok = grad_args.float64 ? run_gradcheck_suite<double>(grad_args)
                                      : run_gradcheck_suite<float>(grad_args);
    grad_failed = !ok;
  });

  PredictArgs predict_args;
  CLI::App* cmd_predict =
      app.add_subcommand("predict", "classify individual images");
  cmd_predict->add_option("--model", predict_args.model, "checkpoint path")
      ->required();
  cmd_predict
      ->add_option("--image", predict_args.images,
                   "image file (repeatable)")
      ->required();
  cmd_predict->callback([&]() { run_predict(predict_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << std::endl;
    return 1;
  }
  return grad_failed ? 1 : 0;
}
