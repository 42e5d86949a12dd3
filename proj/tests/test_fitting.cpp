#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "scanbench/density.hpp"
#include "scanbench/fitting.hpp"
#include "scanbench/synth.hpp"

using namespace scanbench;

namespace {

FitSpec quadratic(double optimum, double lo, double hi, double start) {
  FitSpec s;
  s.names = {"x"};
  s.lower = {lo};
  s.upper = {hi};
  s.initial = {start};
  s.objective = [optimum](const std::vector<double>& x) { return -(x[0] - optimum) * (x[0] - optimum); };
  return s;
}

Dataset images(std::size_t n, std::size_t subjects = 1) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = numbered_id("img", i, 4);
    ds.stimuli.emplace(id, StimulusMeta{id, 10, 10, 1});
    for (std::size_t s = 0; s < subjects; ++s) {
      ds.scanpaths.push_back(Scanpath{id, "s" + std::to_string(s), {Fixation{5, 5}, Fixation{1, 1}}, true});
    }
  }
  return ds;
}

}  // namespace

TEST(Maximize, FindsInteriorOptimum) {
  const auto r = maximize(quadratic(3.0, 0.0, 10.0, 9.0));
  EXPECT_NEAR(r.parameters[0], 3.0, 1e-4);
  EXPECT_NEAR(r.get("x"), 3.0, 1e-4);
  EXPECT_THROW(r.get("y"), ValidationError);
}

TEST(Maximize, ClipsToBound) {
  EXPECT_EQ(maximize(quadratic(12.0, 0.0, 10.0, 5.0)).parameters[0], 10.0);
  EXPECT_EQ(maximize(quadratic(-2.0, 0.0, 10.0, 5.0)).parameters[0], 0.0);
}

TEST(Maximize, MultivariateSeparableAndCoupled) {
  FitSpec s;
  s.names = {"a", "b"};
  s.lower = {-5, -5};
  s.upper = {5, 5};
  s.initial = {0, 0};
  s.objective = [](const std::vector<double>& x) {
    const double a = x[0] - 1.0, b = x[1] + 2.0;
    return -(a * a + b * b + 0.8 * a * b);
  };
  const auto r = maximize(s);
  EXPECT_NEAR(r.parameters[0], 1.0, 1e-3);
  EXPECT_NEAR(r.parameters[1], -2.0, 1e-3);
}

TEST(Maximize, StaysInBoundsAndNeverWorsens) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 25; ++t) {
    FitSpec s;
    s.names = {"a", "b", "c"};
    s.lower = {-1, -2, 0};
    s.upper = {1, 2, 0.5};
    s.initial = {0.3, -1.0, 0.25};
    const double f1 = u(rng), f2 = u(rng), f3 = u(rng);
    s.objective = [=](const std::vector<double>& x) {
      return std::sin(f1 * x[0]) + std::cos(f2 * x[1] * x[0]) - f3 * x[2] * x[2] + std::sin(7 * x[1]);
    };
    const auto r = maximize(s);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_GE(r.parameters[i], s.lower[i]);
      EXPECT_LE(r.parameters[i], s.upper[i]);
    }
    EXPECT_GE(r.objective, s.objective(s.initial));
    EXPECT_EQ(r.objective, s.objective(r.parameters));
  }
}

TEST(Maximize, RejectsInvalidSpecs) {
  auto s = quadratic(1, 0, 2, 1);
  s.initial = {3};
  EXPECT_THROW(maximize(s), ValidationError);
  s = quadratic(1, 2, 2, 2);
  EXPECT_THROW(maximize(s), ValidationError);
  s = quadratic(1, 0, 2, 1);
  s.objective = nullptr;
  EXPECT_THROW(maximize(s), ValidationError);
  s = quadratic(1, 0, 2, 1);
  s.objective = [](const std::vector<double>&) { return -INFINITY; };
  EXPECT_THROW(maximize(s), ValidationError);
}

TEST(Maximize, ResultJson) {
  auto r = maximize(quadratic(1, 0, 2, 0.5));
  r.seed = 4;
  const auto j = r.to_json();
  EXPECT_NEAR(j["parameters"]["x"].get<double>(), 1.0, 1e-4);
  EXPECT_EQ(j["seed"], 4);
  EXPECT_EQ(j["split"], "train_all");
}

TEST(LosoSplits, PartitionBySubject) {
  const auto ds = images(4, 3);
  const auto splits = loso_splits(ds);
  ASSERT_EQ(splits.size(), 3u);
  std::multiset<std::size_t> held;
  for (const auto& s : splits) {
    for (std::size_t i : s.held_out) {
      held.insert(i);
      EXPECT_EQ(ds.scanpaths[i].subject_id, s.held_out_subject);
    }
    for (std::size_t i : s.training) EXPECT_NE(ds.scanpaths[i].subject_id, s.held_out_subject);
    EXPECT_EQ(s.held_out.size() + s.training.size(), ds.scanpaths.size());
  }
  EXPECT_EQ(held.size(), ds.scanpaths.size());
  EXPECT_EQ(std::set<std::size_t>(held.begin(), held.end()).size(), ds.scanpaths.size());
  EXPECT_THROW(loso_splits(images(3, 1)), ValidationError);
}

TEST(SubsetSample, FullAndDeterministic) {
  const auto ds = images(30);
  EXPECT_EQ(subset_sample(ds, 30, 1).image_ids(), ds.image_ids());
  EXPECT_EQ(subset_sample(ds, 30, 1).scanpaths.size(), ds.scanpaths.size());
  EXPECT_EQ(subset_sample(ds, 7, 9).image_ids(), subset_sample(ds, 7, 9).image_ids());
  EXPECT_EQ(subset_sample(ds, 7, 9).image_ids().size(), 7u);
  EXPECT_THROW(subset_sample(ds, 31, 1), ValidationError);
}

TEST(SubsetSample, OverlapFollowsHypergeometric) {
  const auto ds = images(1000);
  // Overlap of two independent 100-of-1000 samples: mean 10, variance 100*0.1*0.9*900/999.
  const double mean = 10.0;
  const double sd = std::sqrt(100 * 0.1 * 0.9 * 900.0 / 999.0);
  double total = 0.0;
  const int pairs = 40;
  for (int t = 0; t < pairs; ++t) {
    const auto a = subset_sample(ds, 100, 2 * t + 1).image_ids();
    const auto b = subset_sample(ds, 100, 2 * t + 2).image_ids();
    std::set<std::string> sa(a.begin(), a.end());
    int overlap = 0;
    for (const auto& id : b) overlap += static_cast<int>(sa.count(id));
    EXPECT_LE(std::abs(overlap - mean), 4 * sd) << "pair " << t;
    total += overlap;
  }
  EXPECT_LE(std::abs(total / pairs - mean), 4 * sd / std::sqrt(pairs));
}

TEST(GoldStandardAssembly, ObjectiveIsMeanOfPerSubjectMeans) {
  SynthConfig cfg;
  cfg.n_images = 4;
  cfg.n_subjects = 4;
  cfg.fixations_per_scanpath = 5;
  cfg.width_px = 40;
  cfg.height_px = 30;
  cfg.model = {{"type", "kde_mixture"}, {"sigma_px", 3.0}, {"uniform_weight", 0.1}};
  auto data = generate_synthetic_dataset(cfg, 8).dataset;
  // Uneven scanpath lengths so that the two averaging orders differ.
  data.scanpaths[0].fixations.resize(2);
  data.scanpaths[5].fixations.resize(3);
  const auto cb = build_center_bias(data, 6.0);
  const KdeParams params{2.5, 0.1, 0.2};

  std::map<std::string, std::pair<double, int>> per_subject;
  for (const auto& sp : data.scanpaths) {
    const auto map = gold_standard_predict(data, sp.image_id, sp.subject_id, params, cb.grid(sp.image_id));
    for (std::size_t i = 1; i < sp.size(); ++i) {
      per_subject[sp.subject_id].first += log_likelihood(map, sp.fixations[i]);
      ++per_subject[sp.subject_id].second;
    }
  }
  double expected = 0.0;
  for (const auto& [s, acc] : per_subject) expected += acc.first / acc.second;
  expected /= static_cast<double>(per_subject.size());
  EXPECT_NEAR(gold_standard_log_likelihood(data, cb, params, false), expected, 1e-12);
}
