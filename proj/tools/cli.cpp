#include "cli.hpp"

#include <CLI/CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "hashednets/budget.hpp"
#include "hashednets/error.hpp"
#include "hashednets/experiment.hpp"
#include "hashednets/feature_hash.hpp"
#include "hashednets/model_io.hpp"
#include "hashednets/training.hpp"

namespace hashednets::cli {
namespace {

using nlohmann::json;

constexpr double kEquivalenceTolerance = 1e-12;

struct Options {
  std::vector<std::size_t> arch{784, 1000, 10};
  std::string kind = "hashed";
  double compression = 1.0;
  double expansion = 1.0;
  std::uint32_t buckets = 0;
  bool no_sign = false;
  std::string activation = "relu";
  std::string index_mode = "precomputed";
  TrainConfig train;
  std::uint64_t seed = 1;

  std::string data = "mnist";
  std::string data_dir;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::uint64_t data_seed = 1;
  double blob_noise = 0.2;

  std::string log_path;
  std::string checkpoint;
  std::string teacher;

  std::string axis = "compression";
  std::vector<double> values;
  std::vector<std::string> methods{"standard", "hashed"};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_path;

  std::size_t samples = 5;
  double epsilon = 1e-5;
  std::size_t layers = 50;
};

void add_arch(CLI::App& cmd, Options& o) {
  cmd.add_option("--arch", o.arch, "Layer widths, input to output")->delimiter(',')->capture_default_str();
}

void add_model(CLI::App& cmd, Options& o) {
  add_arch(cmd, o);
  cmd.add_option("--kind", o.kind, "standard, hashed, edge_removed or low_rank")->capture_default_str();
  cmd.add_option("--compression", o.compression, "Stored/virtual parameter ratio")->capture_default_str();
  cmd.add_option("--expansion", o.expansion, "Hidden-width multiplier at the base budget")->capture_default_str();
  cmd.add_option("--K", o.buckets, "Buckets per hashed layer (overrides --compression)");
  cmd.add_flag("--no-sign", o.no_sign, "Disable the sign hash");
  cmd.add_option("--activation", o.activation, "relu, tanh or sigmoid")->capture_default_str();
  cmd.add_option("--index-mode", o.index_mode, "on_the_fly or precomputed")->capture_default_str();
  cmd.add_option("--seed", o.seed, "Master seed")->capture_default_str();
}

void add_training(CLI::App& cmd, Options& o) {
  cmd.add_option("--lr", o.train.learning_rate, "SGD learning rate")->capture_default_str();
  cmd.add_option("--momentum", o.train.momentum, "Momentum coefficient")->capture_default_str();
  cmd.add_option("--dropout", o.train.dropout_rate, "Dropout rate on hidden units")->capture_default_str();
  cmd.add_option("--batch", o.train.batch_size, "Mini-batch size")->capture_default_str();
  cmd.add_option("--epochs", o.train.epochs, "Training epochs")->capture_default_str();
  cmd.add_option("--dk-temperature", o.train.dk_temperature, "Softmax temperature of the teacher")->capture_default_str();
  cmd.add_option("--dk-mix", o.train.dk_mix, "Weight of the hard labels")->capture_default_str();
}

void add_data(CLI::App& cmd, Options& o) {
  cmd.add_option("--data", o.data, "mnist or blobs")->capture_default_str();
  cmd.add_option("--data-dir", o.data_dir, "Directory with the MNIST IDX files")->envname("HASHEDNETS_DATA_DIR");
  cmd.add_option("--train-size", o.train_size, "Training samples (0: all MNIST, 1000 blobs)");
  cmd.add_option("--test-size", o.test_size, "Test samples (0: all MNIST, 500 blobs)");
  cmd.add_option("--data-seed", o.data_seed, "Seed of the synthetic blobs")->capture_default_str();
  cmd.add_option("--blob-noise", o.blob_noise, "Standard deviation of the blob noise")->capture_default_str();
}

json train_json(const TrainConfig& t) {
  return json{{"learning_rate", t.learning_rate}, {"momentum", t.momentum}, {"dropout_rate", t.dropout_rate},
              {"batch_size", t.batch_size},       {"epochs", t.epochs},     {"dk_temperature", t.dk_temperature},
              {"dk_mix", t.dk_mix}};
}

json model_json(const Options& o) {
  return json{{"arch", o.arch},
              {"kind", o.kind},
              {"compression", o.compression},
              {"expansion", o.expansion},
              {"K", o.buckets},
              {"sign_enabled", !o.no_sign},
              {"activation", o.activation},
              {"index_mode", o.index_mode},
              {"seed", o.seed}};
}

json data_json(const Options& o) {
  json j{{"source", o.data}, {"train_size", o.train_size}, {"test_size", o.test_size}};
  if (o.data == "mnist") {
    j["data_dir"] = o.data_dir;
  } else {
    j["data_seed"] = o.data_seed;
    j["blob_noise"] = o.blob_noise;
  }
  return j;
}

void echo(std::ostream& out, const std::string& command, json config) {
  config["command"] = command;
  out << json{{"config", std::move(config)}}.dump() << '\n';
}

struct Data {
  Dataset train;
  Dataset test;
};

Data load_data(const Options& o, std::size_t input_width, std::size_t classes) {
  if (o.data == "mnist") {
    if (o.data_dir.empty()) {
      throw ConfigError("no MNIST directory: pass --data-dir or set HASHEDNETS_DATA_DIR");
    }
    const auto files = mnist_files(o.data_dir);
    Data d{load_idx(files.train_images, files.train_labels), load_idx(files.test_images, files.test_labels)};
    if (o.train_size > 0) d.train = d.train.head(o.train_size);
    if (o.test_size > 0) d.test = d.test.head(o.test_size);
    d.train.class_count = d.test.class_count = std::max(d.train.class_count, d.test.class_count);
    return d;
  }
  if (o.data == "blobs") {
    const std::size_t n_train = o.train_size > 0 ? o.train_size : 1000;
    const std::size_t n_test = o.test_size > 0 ? o.test_size : 500;
    const std::size_t per_class = (n_train + n_test + classes - 1) / classes;
    const Dataset all = synth_blobs(per_class, classes, input_width, o.data_seed, o.blob_noise);
    std::vector<std::size_t> train_rows(n_train), test_rows(n_test);
    for (std::size_t k = 0; k < n_train; ++k) train_rows[k] = k;
    for (std::size_t k = 0; k < n_test; ++k) test_rows[k] = n_train + k;
    return Data{all.select(train_rows), all.select(test_rows)};
  }
  throw ConfigError("unknown data source \"" + o.data + "\" (expected mnist or blobs)");
}

NetworkPlan plan_for(const Options& o) {
  const LayerKind kind = parse_layer_kind(o.kind);
  if (!(o.compression > 0.0)) throw ConfigError("--compression must be positive");
  if (!(o.expansion > 0.0)) throw ConfigError("--expansion must be positive");
  if (o.compression != 1.0 && o.expansion != 1.0) {
    throw ConfigError("--compression and --expansion are alternatives; set only one");
  }
  if (kind == LayerKind::standard && (o.compression != 1.0 || o.expansion != 1.0 || o.buckets != 0)) {
    throw ConfigError("a standard net is uncompressed; use --kind hashed, edge_removed or low_rank, "
                      "or size a standard net with `shrink`");
  }
  if (o.buckets != 0 && kind != LayerKind::hashed) throw ConfigError("--K applies only to --kind hashed");
  if (o.no_sign && kind != LayerKind::hashed) throw ConfigError("--no-sign applies only to --kind hashed");

  NetworkPlan plan;
  if (o.expansion != 1.0) {
    const Method method = kind == LayerKind::hashed         ? Method::hashed
                          : kind == LayerKind::edge_removed ? Method::edge_removed
                                                            : Method::low_rank;
    plan = plan_method(method, SweepAxis::expansion, o.expansion, o.arch);
  } else {
    plan = plan_compressed(kind, o.arch, o.compression);
  }
  if (o.buckets != 0) plan.budgets.assign(plan.widths.size() - 1, o.buckets);
  plan.activation = parse_activation(o.activation);
  plan.index_mode = parse_index_mode(o.index_mode);
  return plan;
}

Network build_for(const Options& o, const NetworkPlan& plan) {
  const RunSeeds seeds = RunSeeds::from_master(o.seed);
  Network net = build_network(plan, seeds.structure);
  if (o.no_sign) {
    std::vector<std::unique_ptr<Layer>> layers;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      const auto& h = static_cast<const HashedLayer&>(net.layer(l));
      HashedLayerOptions opts{false, h.hash_bias(), h.index_mode()};
      layers.push_back(std::make_unique<HashedLayer>(h.n_in(), h.n_out(), h.assignment().spec(), opts));
    }
    net = Network(std::move(layers), plan.activation);
  }
  net.init_weights(seeds.init);
  return net;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  json config = model_json(o);
  config["train"] = train_json(o.train);
  config["data"] = data_json(o);
  config["log"] = o.log_path;
  config["checkpoint"] = o.checkpoint;
  config["teacher"] = o.teacher;
  echo(out, "train", config);

  o.train.validate();
  const NetworkPlan plan = plan_for(o);
  Network net = build_for(o, plan);
  Data data = load_data(o, net.input_width(), net.output_width());
  if (!o.teacher.empty()) {
    const Network teacher = load_model(std::filesystem::path(o.teacher));
    data.train.soft_targets = distill_targets(teacher, data.train, o.train.dk_temperature);
  }
  TrainConfig config_train = o.train;
  config_train.rng_seed = RunSeeds::from_master(o.seed).training;
  const TrainingLog log = train(net, data.train, &data.test, config_train);
  for (const auto& r : log.epochs) {
    err << "epoch " << r.epoch << " loss " << r.train_loss << " train_err " << r.train_err << " test_err "
        << r.test_err << '\n';
  }
  if (!o.log_path.empty()) {
    std::ofstream f(o.log_path);
    if (!f) throw ConfigError("cannot write log " + o.log_path);
    write_log_csv(log, f);
  }
  if (!o.checkpoint.empty()) save_model(net, std::filesystem::path(o.checkpoint));
  out << json{{"final_test_error", log.final_test_error()},
              {"param_count", net.param_count()},
              {"virtual_widths", net.widths()}}
             .dump()
      << '\n';
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  json config{{"checkpoint", o.checkpoint}, {"data", data_json(o)}};
  echo(out, "eval", config);
  const Network net = load_model(std::filesystem::path(o.checkpoint));
  const Data data = load_data(o, net.input_width(), net.output_width());
  out << json{{"test_error", net.error_rate(data.test)},
              {"param_count", net.param_count()},
              {"virtual_widths", net.widths()}}
             .dump()
      << '\n';
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  json config{{"arch", o.arch},
              {"axis", o.axis},
              {"values", o.values},
              {"methods", o.methods},
              {"seeds", o.seeds},
              {"activation", o.activation},
              {"index_mode", o.index_mode},
              {"train", train_json(o.train)},
              {"data", data_json(o)},
              {"out", o.out_path}};
  echo(out, "sweep", config);

  if (o.values.empty()) throw ConfigError("--values needs at least one value");
  o.train.validate();
  const SweepAxis axis = parse_axis(o.axis);
  std::vector<Method> methods;
  for (const auto& m : o.methods) methods.push_back(parse_method(m));
  ExperimentSetup setup;
  setup.base_widths = o.arch;
  setup.activation = parse_activation(o.activation);
  setup.index_mode = parse_index_mode(o.index_mode);
  setup.train = o.train;
  if (o.arch.size() < 2) throw DegenerateArchitecture("--arch needs at least two widths");
  const Data data = load_data(o, o.arch.front(), o.arch.back());

  std::ofstream csv(o.out_path);
  if (!csv) throw ConfigError("cannot write " + o.out_path);
  const auto rows = run_sweep(setup, data.train, data.test, axis, o.values, methods, o.seeds,
                              [&err](const SweepRow& row) {
                                err << "value " << row.axis_value << ' ' << method_name(row.method) << " seed "
                                    << row.seed << " test_err ";
                                if (row.test_error) {
                                  err << *row.test_error << '\n';
                                } else {
                                  err << "infeasible\n";
                                }
                              });
  write_sweep_csv(rows, csv);
  std::size_t infeasible = 0;
  for (const auto& r : rows) infeasible += r.test_error ? 0 : 1;
  out << json{{"rows", rows.size()}, {"infeasible", infeasible}, {"out", o.out_path}}.dump() << '\n';
  return 0;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  Options checked = o;
  checked.activation = "tanh";
  json config = model_json(checked);
  config["samples"] = o.samples;
  config["epsilon"] = o.epsilon;
  echo(out, "gradcheck", config);

  const NetworkPlan plan = plan_for(checked);
  Network net = build_for(checked, plan);
  Rng rng(derive_seed(o.seed, 6));
  Matrix x(o.samples, net.input_width());
  for (double& v : x.data()) v = rng.uniform(-1.0, 1.0);
  std::vector<std::uint32_t> labels(o.samples);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(net.output_width()));
  const GradCheckResult r = grad_check(net, x, labels, o.epsilon);
  const bool pass = r.max_rel_error < 1e-6;
  out << json{{"max_rel_error", r.max_rel_error},
              {"worst_layer", r.worst_layer},
              {"worst_param", r.worst_param},
              {"params_checked", r.params_checked},
              {"pass", pass}}
             .dump()
      << '\n';
  return pass ? 0 : kCheckFailed;
}

int cmd_shrink(const Options& o, std::ostream& out) {
  echo(out, "shrink", json{{"arch", o.arch}, {"compression", o.compression}});
  const ShrinkageResult r = solve_shrinkage(Architecture{o.arch, o.compression});
  out << json{{"r", r.r},
              {"n_hash", r.n_hash},
              {"n_standard", r.n_standard},
              {"widths", r.widths},
              {"within_slack", r.within_slack}}
             .dump()
      << '\n';
  return 0;
}

int cmd_equivtest(const Options& o, std::ostream& out) {
  echo(out, "equivtest", json{{"layers", o.layers}, {"seed", o.seed}});
  const EquivalenceReport r = equivalence_suite(o.layers, o.seed);
  const bool pass = r.worst() <= kEquivalenceTolerance;
  out << json{{"layers", r.layers},
              {"max_abs_diff_forward", r.forward},
              {"max_abs_diff_backward_error", r.backward_error},
              {"max_abs_diff_gradient", r.gradient},
              {"tolerance", kEquivalenceTolerance},
              {"pass", pass}}
             .dump()
      << '\n';
  return pass ? 0 : kCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Train and compare hashed, pruned, low-rank and standard networks"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags win)");
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Train one network, write a CSV log and a checkpoint");
  add_model(*train_cmd, o);
  add_training(*train_cmd, o);
  add_data(*train_cmd, o);
  train_cmd->add_option("--log", o.log_path, "CSV training log");
  train_cmd->add_option("--checkpoint", o.checkpoint, "Model file to write");
  train_cmd->add_option("--teacher", o.teacher, "Checkpoint whose softened outputs become soft targets");

  auto* eval_cmd = app.add_subcommand("eval", "Test error of a saved model");
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Model file to read")->required();
  add_data(*eval_cmd, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Test error of several methods over compression or expansion");
  add_arch(*sweep_cmd, o);
  sweep_cmd->add_option("--axis", o.axis, "compression or expansion")->capture_default_str();
  sweep_cmd->add_option("--values", o.values, "Axis values")->delimiter(',')->required();
  sweep_cmd->add_option("--methods", o.methods, "standard, hashed, hashed_dk, edge_removed, low_rank, dark_knowledge")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", o.seeds, "Master seeds, one run each")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--activation", o.activation)->capture_default_str();
  sweep_cmd->add_option("--index-mode", o.index_mode)->capture_default_str();
  sweep_cmd->add_option("--out", o.out_path, "CSV file to write")->required();
  add_training(*sweep_cmd, o);
  add_data(*sweep_cmd, o);

  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare backprop with central differences (tanh)");
  add_model(*grad_cmd, o);
  grad_cmd->add_option("--samples", o.samples)->capture_default_str();
  grad_cmd->add_option("--epsilon", o.epsilon)->capture_default_str();

  auto* shrink_cmd = app.add_subcommand("shrink", "Shrinkage factor of the size-matched standard net");
  add_arch(*shrink_cmd, o);
  shrink_cmd->add_option("--c,--compression", o.compression, "Compression factor")->required();

  auto* equiv_cmd = app.add_subcommand("equivtest", "Check hashed layers against the feature-hashing oracles");
  equiv_cmd->add_option("--layers", o.layers)->capture_default_str();
  equiv_cmd->add_option("--seed", o.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(o, out, err);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
    if (sweep_cmd->parsed()) return cmd_sweep(o, out, err);
    if (grad_cmd->parsed()) return cmd_gradcheck(o, out);
    if (shrink_cmd->parsed()) return cmd_shrink(o, out);
    if (equiv_cmd->parsed()) return cmd_equivtest(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kRuntimeError;
}

}  // namespace hashednets::cli
