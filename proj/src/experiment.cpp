#include "hashednets/experiment.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "hashednets/budget.hpp"
#include "hashednets/error.hpp"
#include "hashednets/random.hpp"

namespace hashednets {
namespace {

constexpr std::string_view kMethodNames[] = {"standard", "hashed", "hashed_dk",
                                             "edge_removed", "low_rank", "dark_knowledge"};

void check_widths(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw DegenerateArchitecture("an architecture needs at least input and output widths");
  for (auto w : widths) {
    if (w == 0) throw DegenerateArchitecture("layer widths must be at least 1");
  }
}

void check_factor(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string(what) + " must be a positive number, got " + std::to_string(value));
  }
}

Dataset with_soft_targets(const Dataset& data, const Network& teacher, double temperature) {
  Dataset out = data;
  out.soft_targets = distill_targets(teacher, data, temperature);
  return out;
}

}  // namespace

Method parse_method(std::string_view name) {
  for (std::size_t k = 0; k < std::size(kMethodNames); ++k) {
    if (name == kMethodNames[k]) return static_cast<Method>(k);
  }
  throw ConfigError("unknown method \"" + std::string(name) +
                    "\" (expected standard, hashed, hashed_dk, edge_removed, low_rank or dark_knowledge)");
}

std::string_view method_name(Method method) noexcept { return kMethodNames[static_cast<std::size_t>(method)]; }

bool uses_distillation(Method method) noexcept {
  return method == Method::hashed_dk || method == Method::dark_knowledge;
}

SweepAxis parse_axis(std::string_view name) {
  if (name == "compression") return SweepAxis::compression;
  if (name == "expansion") return SweepAxis::expansion;
  throw ConfigError("unknown sweep axis \"" + std::string(name) + "\" (expected compression or expansion)");
}

std::string_view axis_name(SweepAxis axis) noexcept {
  return axis == SweepAxis::compression ? "compression" : "expansion";
}

std::vector<std::size_t> compression_budgets(const std::vector<std::size_t>& widths, double c) {
  check_widths(widths);
  check_factor(c, "compression factor");
  std::vector<std::size_t> budgets(widths.size() - 1);
  for (std::size_t l = 0; l < budgets.size(); ++l) budgets[l] = hashed_layer_budget(widths, l, c);
  return budgets;
}

NetworkPlan plan_compressed(LayerKind kind, const std::vector<std::size_t>& widths, double c) {
  NetworkPlan plan;
  plan.kind = kind;
  plan.widths = widths;
  if (kind != LayerKind::standard) plan.budgets = compression_budgets(widths, c);
  return plan;
}

NetworkPlan plan_method(Method method, SweepAxis axis, double value, const std::vector<std::size_t>& base_widths) {
  check_widths(base_widths);
  check_factor(value, axis == SweepAxis::compression ? "compression factor" : "expansion factor");
  const bool standard_like = method == Method::standard || method == Method::dark_knowledge;
  LayerKind kind = LayerKind::hashed;
  if (method == Method::edge_removed) kind = LayerKind::edge_removed;
  if (method == Method::low_rank) kind = LayerKind::low_rank;

  if (axis == SweepAxis::compression) {
    if (standard_like) {
      NetworkPlan plan;
      if (base_widths.size() < 3) {
        throw ConfigError("a size-matched standard net needs at least one hidden layer");
      }
      plan.widths = solve_shrinkage(Architecture{base_widths, value}).widths;
      return plan;
    }
    return plan_compressed(kind, base_widths, value);
  }

  if (standard_like) return plan_compressed(LayerKind::standard, base_widths, 1.0);
  NetworkPlan plan;
  plan.kind = kind;
  plan.budgets = compression_budgets(base_widths, 1.0);
  plan.widths = base_widths;
  for (std::size_t l = 1; l + 1 < plan.widths.size(); ++l) {
    const auto w = round_half_up(value * static_cast<double>(base_widths[l]));
    if (w < 1) throw DegenerateArchitecture("expansion " + std::to_string(value) + " empties hidden layer " +
                                            std::to_string(l));
    plan.widths[l] = static_cast<std::size_t>(w);
  }
  return plan;
}

Network build_network(const NetworkPlan& plan, std::uint64_t structure_seed) {
  check_widths(plan.widths);
  const std::size_t depth = plan.widths.size() - 1;
  if (plan.kind != LayerKind::standard && plan.budgets.size() != depth) {
    throw ConfigError("network plan needs one budget per layer");
  }
  std::vector<std::unique_ptr<Layer>> layers;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t n_in = plan.widths[l];
    const std::size_t n_out = plan.widths[l + 1];
    const bool output = l + 1 == depth;
    const std::size_t budget = plan.kind == LayerKind::standard ? 0 : plan.budgets[l];
    if (plan.kind != LayerKind::standard && budget == 0) {
      throw InfeasibleBudget("layer " + std::to_string(l) + " has no stored weights left");
    }
    switch (plan.kind) {
      case LayerKind::standard:
        layers.push_back(std::make_unique<StandardLayer>(n_in, n_out));
        break;
      case LayerKind::hashed: {
        if (budget > 0xFFFFFFFFull) throw InfeasibleBudget("bucket count exceeds 32 bits");
        HashSpec spec{structure_seed, static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(budget)};
        HashedLayerOptions options;
        options.hash_bias = !output;
        options.index_mode = plan.index_mode;
        layers.push_back(std::make_unique<HashedLayer>(n_in, n_out, spec, options));
        break;
      }
      case LayerKind::edge_removed: {
        const std::size_t maskable = output ? n_in * n_out : (n_in + 1) * n_out;
        if (budget > maskable) {
          throw InfeasibleBudget("edge removal cannot keep " + std::to_string(budget) + " of " +
                                 std::to_string(maskable) + " connections in layer " + std::to_string(l));
        }
        layers.push_back(
            std::make_unique<EdgeRemovedLayer>(n_in, n_out, budget, derive_seed(structure_seed, l), !output));
        break;
      }
      case LayerKind::low_rank: {
        const std::size_t total = budget + (output ? n_out : 0);
        const std::size_t rank = total / (n_in + 1);
        if (rank == 0) {
          throw InfeasibleBudget("budget " + std::to_string(total) + " of layer " + std::to_string(l) +
                                 " is below one rank (" + std::to_string(n_in + 1) + ")");
        }
        layers.push_back(std::make_unique<LowRankLayer>(n_in, n_out, rank, derive_seed(structure_seed, l)));
        break;
      }
    }
  }
  return Network(std::move(layers), plan.activation);
}

RunSeeds RunSeeds::from_master(std::uint64_t master) {
  return RunSeeds{derive_seed(master, 1), derive_seed(master, 2), derive_seed(master, 3), derive_seed(master, 4),
                  derive_seed(master, 5)};
}

Network train_teacher(const ExperimentSetup& setup, const Dataset& train_set, std::uint64_t master_seed) {
  const RunSeeds seeds = RunSeeds::from_master(master_seed);
  NetworkPlan plan = plan_compressed(LayerKind::standard, setup.base_widths, 1.0);
  plan.activation = setup.activation;
  Network teacher = build_network(plan, 0);
  teacher.init_weights(seeds.teacher_init);
  TrainConfig config = setup.train;
  config.rng_seed = seeds.teacher_training;
  train(teacher, train_set, nullptr, config);
  return teacher;
}

PointResult run_point(const ExperimentSetup& setup, const Dataset& train_set, const Dataset& test_set,
                      Method method, SweepAxis axis, double value, std::uint64_t master_seed,
                      const Network* teacher) {
  const RunSeeds seeds = RunSeeds::from_master(master_seed);
  NetworkPlan plan = plan_method(method, axis, value, setup.base_widths);
  plan.activation = setup.activation;
  plan.index_mode = setup.index_mode;
  Network net = build_network(plan, seeds.structure);
  net.init_weights(seeds.init);

  TrainConfig config = setup.train;
  config.rng_seed = seeds.training;
  PointResult result;
  result.param_count = net.param_count();
  if (uses_distillation(method)) {
    if (teacher == nullptr) throw ConfigError(std::string(method_name(method)) + " needs a teacher network");
    const Dataset soft = with_soft_targets(train_set, *teacher, config.dk_temperature);
    result.log = train(net, soft, &test_set, config);
  } else {
    result.log = train(net, train_set, &test_set, config);
  }
  result.test_error = result.log.final_test_error();
  return result;
}

std::vector<SweepRow> run_sweep(const ExperimentSetup& setup, const Dataset& train_set, const Dataset& test_set,
                                SweepAxis axis, const std::vector<double>& values,
                                const std::vector<Method>& methods, const std::vector<std::uint64_t>& seeds,
                                const SweepProgress& progress) {
  if (values.empty()) throw ConfigError("sweep needs at least one axis value");
  if (methods.empty()) throw ConfigError("sweep needs at least one method");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  for (double v : values) check_factor(v, axis == SweepAxis::compression ? "compression factor" : "expansion factor");

  std::map<std::uint64_t, Network> teachers;
  bool distill = false;
  for (auto m : methods) distill = distill || uses_distillation(m);
  if (distill) {
    for (auto s : seeds) {
      if (!teachers.contains(s)) teachers.emplace(s, train_teacher(setup, train_set, s));
    }
  }

  std::vector<SweepRow> rows;
  for (double value : values) {
    for (Method method : methods) {
      for (auto seed : seeds) {
        SweepRow row{value, method, seed, std::nullopt, 0};
        const Network* teacher = distill && uses_distillation(method) ? &teachers.at(seed) : nullptr;
        try {
          const PointResult point = run_point(setup, train_set, test_set, method, axis, value, seed, teacher);
          row.test_error = point.test_error;
          row.param_count = point.param_count;
        } catch (const InfeasibleBudget&) {
        } catch (const DegenerateArchitecture&) {
        }
        rows.push_back(row);
        if (progress) progress(row);
      }
    }
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  const auto old_precision = out.precision(17);
  out << "axis_value,method,seed,test_error,param_count\n";
  for (const auto& r : rows) {
    out << r.axis_value << ',' << method_name(r.method) << ',' << r.seed << ',';
    if (r.test_error) {
      out << *r.test_error;
    } else {
      out << "infeasible";
    }
    out << ',' << r.param_count << '\n';
  }
  out.precision(old_precision);
}

}  // namespace hashednets
