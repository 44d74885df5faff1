#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hashednets/budget.hpp"
#include "hashednets/error.hpp"
#include "hashednets/experiment.hpp"

using namespace hashednets;

TEST(Plan, StandardIsSizeMatched) {
  const NetworkPlan plan = plan_method(Method::standard, SweepAxis::compression, 0.125, {784, 1000, 10});
  EXPECT_EQ(plan.kind, LayerKind::standard);
  EXPECT_EQ(plan.widths, (std::vector<std::size_t>{784, 125, 10}));
}

TEST(Plan, HashedCountMatchesBudget) {
  for (double c : {1.0 / 64, 0.125, 0.5, 1.0}) {
    const std::vector<std::size_t> widths{50, 40, 30, 10};
    const Network net = build_network(plan_method(Method::hashed, SweepAxis::compression, c, widths), 3);
    EXPECT_EQ(net.param_count(), param_count_hashed(Architecture{widths, c})) << c;
  }
}

TEST(Plan, EdgeRemovalCountMatchesBudget) {
  const std::vector<std::size_t> widths{50, 40, 10};
  const Network net = build_network(plan_method(Method::edge_removed, SweepAxis::compression, 0.25, widths), 3);
  EXPECT_EQ(net.param_count(), param_count_hashed(Architecture{widths, 0.25}));
}

TEST(Plan, LowRankStaysWithinBudget) {
  const std::vector<std::size_t> widths{50, 40, 10};
  const Network net = build_network(plan_method(Method::low_rank, SweepAxis::compression, 0.25, widths), 3);
  EXPECT_LE(net.param_count(), param_count_hashed(Architecture{widths, 0.25}));
  EXPECT_EQ(static_cast<const LowRankLayer&>(net.layer(0)).rank(), 510u / 51u);
}

TEST(Plan, ExpansionKeepsBaseBudget) {
  const std::vector<std::size_t> base{784, 50, 10};
  const NetworkPlan plan = plan_method(Method::hashed, SweepAxis::expansion, 4.0, base);
  EXPECT_EQ(plan.widths, (std::vector<std::size_t>{784, 200, 10}));
  const Network net = build_network(plan, 1);
  EXPECT_EQ(net.param_count(), param_count_dense(base));
  EXPECT_EQ(plan_method(Method::standard, SweepAxis::expansion, 4.0, base).widths, base);
}

TEST(Plan, EdgeRemovalAtUnitExpansionIsStandard) {
  const std::vector<std::size_t> base{30, 20, 15, 5};
  Network edge = build_network(plan_method(Method::edge_removed, SweepAxis::expansion, 1.0, base), 8);
  Network standard = build_network(plan_method(Method::standard, SweepAxis::expansion, 1.0, base), 8);
  edge.init_weights(4);
  standard.init_weights(4);
  EXPECT_EQ(edge.param_count(), standard.param_count());
  for (std::size_t l = 0; l < edge.layer_count(); ++l) {
    Matrix a, b;
    edge.layer(l).materialize(a);
    standard.layer(l).materialize(b);
    EXPECT_EQ(a, b) << "layer " << l;
  }
}

TEST(Plan, InfeasiblePoints) {
  const std::vector<std::size_t> base{784, 50, 10};
  EXPECT_THROW(build_network(plan_method(Method::edge_removed, SweepAxis::expansion, 0.5, base), 1),
               InfeasibleBudget);
  EXPECT_THROW(build_network(plan_method(Method::low_rank, SweepAxis::compression, 1e-4, base), 1),
               InfeasibleBudget);
  EXPECT_THROW(build_network(plan_method(Method::hashed, SweepAxis::compression, 1e-9, base), 1),
               InfeasibleBudget);
  EXPECT_THROW(plan_method(Method::hashed, SweepAxis::compression, 0.0, base), ConfigError);
}

TEST(Plan, ParseNames) {
  EXPECT_EQ(parse_method("hashed_dk"), Method::hashed_dk);
  EXPECT_EQ(method_name(Method::dark_knowledge), "dark_knowledge");
  EXPECT_THROW(parse_method("pruned"), ConfigError);
  EXPECT_EQ(parse_axis("expansion"), SweepAxis::expansion);
  EXPECT_THROW(parse_axis("depth"), ConfigError);
}

TEST(Sweep, MarksInfeasibleRowsAndContinues) {
  const Dataset all = synth_blobs(40, 3, 6, 2, 0.2);
  const Dataset train_set = all.head(90), test_set = all.select({90, 91, 92, 93, 94, 95});
  ExperimentSetup setup;
  setup.base_widths = {6, 8, 3};
  setup.train.epochs = 2;
  const auto rows = run_sweep(setup, train_set, test_set, SweepAxis::compression, {0.5, 1e-9},
                              {Method::hashed, Method::standard, Method::hashed_dk}, {1, 2});
  ASSERT_EQ(rows.size(), 12u);
  for (const auto& r : rows) EXPECT_EQ(r.test_error.has_value(), r.axis_value == 0.5);
  std::ostringstream csv;
  write_sweep_csv(rows, csv);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "axis_value,method,seed,test_error,param_count");
  EXPECT_NE(text.find("1.0000000000000001e-09,hashed,1,infeasible,0"), std::string::npos) << text;
  EXPECT_THROW(run_sweep(setup, train_set, test_set, SweepAxis::compression, {}, {Method::hashed}, {1}),
               ConfigError);
}

TEST(Sweep, UnitCompressionHashedTracksStandard) {
  const Dataset all = synth_blobs(150, 4, 16, 9, 0.35);
  const Dataset train_set = all.head(400);
  std::vector<std::size_t> rest(200);
  for (std::size_t k = 0; k < 200; ++k) rest[k] = 400 + k;
  const Dataset test_set = all.select(rest);
  ExperimentSetup setup;
  setup.base_widths = {16, 32, 4};
  setup.train.epochs = 10;
  setup.train.learning_rate = 0.02;
  const auto rows = run_sweep(setup, train_set, test_set, SweepAxis::compression, {1.0},
                              {Method::standard, Method::hashed}, {1, 2, 3, 4, 5});
  double diff = 0.0, sq = 0.0;
  for (std::size_t s = 0; s < 5; ++s) {
    const double d = *rows[5 + s].test_error - *rows[s].test_error;
    diff += d;
    sq += d * d;
  }
  const double mean = diff / 5.0;
  const double se = std::sqrt(std::max(0.0, sq / 5.0 - mean * mean) / 4.0);
  EXPECT_LE(std::abs(mean), std::max(3.0 * se, 0.02));
}
