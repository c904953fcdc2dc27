#include "mdreg/gol.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <string>

namespace {

using mdreg::RowMatrix;
using mdreg::ValueGroups;
using namespace mdreg::gol;

// Two-dimensional features whose angle encodes a 1-D label.
struct Toy {
  RowMatrix raw;
  std::vector<double> labels;
};

Toy toy_problem(std::size_t n, std::uint64_t seed) {
  mdreg::Rng rng(seed);
  Toy t{RowMatrix(static_cast<Eigen::Index>(n), 2), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const double y = rng.uniform(0.0, 10.0);
    const double angle = 0.15 * y;
    t.raw(static_cast<Eigen::Index>(i), 0) = std::cos(angle) + 0.02 * rng.normal();
    t.raw(static_cast<Eigen::Index>(i), 1) = std::sin(angle) + 0.02 * rng.normal();
    t.labels.push_back(y);
  }
  return t;
}

std::vector<double> moving_average(const std::vector<TrainRecord>& trace, std::size_t window) {
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    sum += trace[i].loss.total;
    if (i >= window) sum -= trace[i - window].loss.total;
    if (i + 1 >= window) out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

TEST(Trainer, ReducesLossOnToyProblem) {
  const Toy toy = toy_problem(300, 1);
  const ValueGroups groups(0.0, 10.0, 5);
  TrainSchedule schedule;
  schedule.seed = 7;
  schedule.embedding_dim = 4;
  const auto result = train_toy_embedder(toy.raw, toy.labels, groups, {}, schedule);
  ASSERT_EQ(result.trace.size(), 500u);
  EXPECT_LT(result.trace.back().loss.total, result.trace.front().loss.total);
}

TEST(Trainer, TraceIsNearlyMonotone) {
  const Toy toy = toy_problem(300, 1);
  const ValueGroups groups(0.0, 10.0, 5);
  TrainSchedule schedule;
  schedule.seed = 7;
  schedule.embedding_dim = 4;
  const auto result = train_toy_embedder(toy.raw, toy.labels, groups, {}, schedule);
  const auto avg = moving_average(result.trace, 20);
  // Small wobbles are allowed; any rise must stay far below the starting loss.
  const double tolerance = 0.01 * result.trace.front().loss.total;
  for (std::size_t i = 1; i < avg.size(); ++i) EXPECT_LE(avg[i], avg[i - 1] + tolerance) << "at window " << i;
}

TEST(Trainer, DeterministicInSeed) {
  const Toy toy = toy_problem(120, 2);
  const ValueGroups groups(0.0, 10.0, 4);
  TrainSchedule schedule;
  schedule.steps = 50;
  schedule.seed = 3;
  const auto a = train_toy_embedder(toy.raw, toy.labels, groups, {}, schedule);
  const auto b = train_toy_embedder(toy.raw, toy.labels, groups, {}, schedule);
  EXPECT_EQ(a.embedder.weight, b.embedder.weight);
  EXPECT_EQ(a.refs.points, b.refs.points);
  schedule.seed = 4;
  const auto c = train_toy_embedder(toy.raw, toy.labels, groups, {}, schedule);
  EXPECT_NE(a.embedder.weight, c.embedder.weight);
}

TEST(Trainer, TwoGroupsRunCleanly) {
  const Toy toy = toy_problem(60, 3);
  const ValueGroups groups(0.0, 10.0, 2);
  TrainSchedule schedule;
  schedule.steps = 100;
  const auto result = train_toy_embedder(toy.raw, toy.labels, groups, {}, schedule);
  EXPECT_EQ(result.refs.count(), 2);
  EXPECT_TRUE(result.embedder.weight.allFinite());
  EXPECT_TRUE(result.refs.points.allFinite());
}

TEST(Trainer, HugeLearningRateReportsDivergenceStep) {
  const Toy toy = toy_problem(200, 4);
  const ValueGroups groups(0.0, 10.0, 5);
  TrainSchedule schedule;
  schedule.learning_rate = 1e3;
  try {
    train_toy_embedder(toy.raw, toy.labels, groups, {}, schedule);
    FAIL() << "expected divergence";
  } catch (const mdreg::DivergenceError& e) {
    EXPECT_LT(e.step(), schedule.steps);
    EXPECT_NE(std::string(e.what()).find("step " + std::to_string(e.step())), std::string::npos);
  }
}

TEST(Trainer, ContinueTrainingWithZeroStepsKeepsParameters) {
  const Toy toy = toy_problem(80, 5);
  const ValueGroups groups(0.0, 10.0, 3);
  TrainSchedule schedule;
  schedule.steps = 20;
  const auto first = train_toy_embedder(toy.raw, toy.labels, groups, {}, schedule);
  schedule.steps = 0;
  const auto again = continue_training(toy.raw, toy.labels, groups, {}, schedule, first.embedder, first.refs);
  EXPECT_EQ(again.embedder.weight, first.embedder.weight);
  EXPECT_EQ(again.refs.points, first.refs.points);
  EXPECT_TRUE(again.trace.empty());
}

TEST(Trainer, RejectsMismatchedInputs) {
  const Toy toy = toy_problem(20, 6);
  std::vector<double> short_labels(toy.labels.begin(), toy.labels.end() - 1);
  EXPECT_THROW(train_toy_embedder(toy.raw, short_labels, ValueGroups(0.0, 10.0, 3), {}, {}),
               mdreg::ParameterError);
}

}  // namespace
