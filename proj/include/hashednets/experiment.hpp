#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "hashednets/data.hpp"
#include "hashednets/layers.hpp"
#include "hashednets/network.hpp"
#include "hashednets/training.hpp"

namespace hashednets {

/// Methods compared at a matched parameter budget.
///
///   standard        standard net shrunk to the budget (expansion axis: the base net)
///   hashed          hashed net
///   hashed_dk       hashed net trained on distilled targets
///   edge_removed    random edge removal
///   low_rank        low-rank factorisation
///   dark_knowledge  the standard net of `standard`, trained on distilled targets
enum class Method { standard, hashed, hashed_dk, edge_removed, low_rank, dark_knowledge };

Method parse_method(std::string_view name);
std::string_view method_name(Method method) noexcept;
bool uses_distillation(Method method) noexcept;

/// compression: the value is c and the virtual net keeps the base widths.
/// expansion: the value multiplies the hidden widths while every layer keeps
/// the stored-weight budget of the uncompressed base net.
enum class SweepAxis { compression, expansion };

SweepAxis parse_axis(std::string_view name);
std::string_view axis_name(SweepAxis axis) noexcept;

/// Everything needed to build a network apart from seeds.
struct NetworkPlan {
  LayerKind kind = LayerKind::standard;
  std::vector<std::size_t> widths;
  /// Stored weights per layer. The output layer's biases are extra and free.
  /// Unused for standard nets.
  std::vector<std::size_t> budgets;
  ActivationKind activation = ActivationKind::relu;
  IndexMode index_mode = IndexMode::on_the_fly;
};

/// Per-layer budgets round(c (n^l + 1) n^{l+1}), and round(c n^{L-1} n^L) for
/// the output layer.
std::vector<std::size_t> compression_budgets(const std::vector<std::size_t>& widths, double c);

/// Network of `kind` over `widths` compressed by c (the kind's own
/// compression, no width change). Throws InfeasibleBudget when a layer ends up
/// with nothing to store.
NetworkPlan plan_compressed(LayerKind kind, const std::vector<std::size_t>& widths, double c);

/// Plan for one sweep point. Throws InfeasibleBudget, DegenerateArchitecture or
/// ConfigError when the point cannot be built.
NetworkPlan plan_method(Method method, SweepAxis axis, double value, const std::vector<std::size_t>& base_widths);

/// Builds the network. Hashed layer l uses HashSpec{structure_seed, l, K};
/// edge masks and low-rank fixed factors use derive_seed(structure_seed, l).
/// Hidden layers hash (or mask) their bias with the weights; the output layer
/// keeps free biases. Low-rank layers take rank floor(budget / (n_in + 1)),
/// with the output biases added to the output layer's budget. Weights are left
/// at zero; call init_weights.
Network build_network(const NetworkPlan& plan, std::uint64_t structure_seed);

/// Seeds of one repetition, all derived from its master seed.
struct RunSeeds {
  std::uint64_t init = 0;
  std::uint64_t structure = 0;
  std::uint64_t training = 0;
  std::uint64_t teacher_init = 0;
  std::uint64_t teacher_training = 0;

  static RunSeeds from_master(std::uint64_t master);
};

struct ExperimentSetup {
  std::vector<std::size_t> base_widths;
  ActivationKind activation = ActivationKind::relu;
  IndexMode index_mode = IndexMode::precomputed;
  TrainConfig train;
};

/// Trains the full-size standard net used as the distillation teacher.
Network train_teacher(const ExperimentSetup& setup, const Dataset& train_set, std::uint64_t master_seed);

struct PointResult {
  double test_error = 0.0;
  std::size_t param_count = 0;
  TrainingLog log;
};

/// Trains and evaluates one (method, axis value, seed) point. Distillation
/// methods need `teacher`.
PointResult run_point(const ExperimentSetup& setup, const Dataset& train_set, const Dataset& test_set,
                      Method method, SweepAxis axis, double value, std::uint64_t master_seed,
                      const Network* teacher = nullptr);

struct SweepRow {
  double axis_value = 0.0;
  Method method = Method::standard;
  std::uint64_t seed = 0;
  /// Empty when the point is infeasible.
  std::optional<double> test_error;
  std::size_t param_count = 0;
};

using SweepProgress = std::function<void(const SweepRow&)>;

/// Runs every (value, method, seed) point in that nesting order. Teachers are
/// trained once per seed when a distillation method is requested.
std::vector<SweepRow> run_sweep(const ExperimentSetup& setup, const Dataset& train_set, const Dataset& test_set,
                                SweepAxis axis, const std::vector<double>& values,
                                const std::vector<Method>& methods, const std::vector<std::uint64_t>& seeds,
                                const SweepProgress& progress = {});

/// Columns axis_value,method,seed,test_error,param_count; infeasible points
/// have test_error "infeasible".
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace hashednets
