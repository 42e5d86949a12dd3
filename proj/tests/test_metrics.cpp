#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scanbench/metrics.hpp"

using namespace scanbench;

namespace {

Fixation at(double x, double y) { return Fixation{x, y, std::nullopt, false}; }

PriorityMap row(std::vector<double> v, MapKind kind = MapKind::priority) {
  const int n = static_cast<int>(v.size());
  return PriorityMap(n, 1, std::move(v), kind);
}

}  // namespace

TEST(LogLikelihood, UniformIsExactlyZero) {
  for (int w : {1, 3, 7, 64, 1000}) {
    for (int h : {1, 5, 768}) {
      const auto m = PriorityMap::uniform(GridGeometry{w, h, 1});
      EXPECT_EQ(log_likelihood(m, at(w - 0.5, h - 0.5)), 0.0) << w << "x" << h;
      EXPECT_EQ(log_likelihood(m, at(0, 0)), 0.0);
    }
  }
}

TEST(LogLikelihood, ArithmeticExamples) {
  const auto m = row({0.7, 0.1, 0.1, 0.1}, MapKind::probability);
  EXPECT_NEAR(log_likelihood(m, at(0.5, 0.5)), std::log2(0.7 * 4), 1e-12);
  EXPECT_NEAR(log_likelihood(m, at(0.5, 0.5)), 1.4854, 5e-5);
  EXPECT_NEAR(log_likelihood(m, at(2.5, 0.5)), -1.3219, 5e-5);
}

TEST(LogLikelihood, ZeroCellsAreFlooredNotInfinite) {
  const auto m = row({1.0, 0.0}, MapKind::probability);
  const double ll = log_likelihood(m, at(1.5, 0.5));
  EXPECT_TRUE(std::isfinite(ll));
  EXPECT_NEAR(ll, std::log2(0x1p-32 / (1.0 + 0x1p-32) * 2.0), 1e-9);
  EXPECT_NEAR(log_likelihood(m, at(0.5, 0.5)), std::log2(2.0 / (1.0 + 0x1p-32)), 1e-12);
}

TEST(LogLikelihood, RequiresProbabilityMapAndInsideFixation) {
  EXPECT_THROW(log_likelihood(row({1, 2}), at(0.5, 0.5)), ValidationError);
  EXPECT_THROW(log_likelihood(row({0.5, 0.5}, MapKind::probability), at(2.5, 0.5)), ValidationError);
}

TEST(LogLikelihood, MaximizedAtArgmaxCell) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  const GridGeometry g{9, 6, 1};
  for (int t = 0; t < 20; ++t) {
    std::vector<double> w(g.cells());
    for (auto& x : w) x = u(rng);
    const auto m = PriorityMap::from_weights(g, w);
    std::size_t best = 0;
    for (std::size_t i = 0; i < w.size(); ++i) best = m[i] > m[best] ? i : best;
    const double top = log_likelihood(m, at(best % 9 + 0.5, best / 9 + 0.5));
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 9; ++c) EXPECT_LE(log_likelihood(m, at(c + 0.5, r + 0.5)), top);
    }
  }
}

TEST(InformationGain, Examples) {
  const auto model = row({0.5, 0.25, 0.25}, MapKind::probability);
  const auto base = row({0.25, 0.5, 0.25}, MapKind::probability);
  EXPECT_EQ(information_gain(model, base, at(0.5, 0.5)), 1.0);
  EXPECT_EQ(information_gain(model, model, at(1.5, 0.5)), 0.0);
  const auto uni = PriorityMap::uniform(GridGeometry{3, 1, 1});
  for (double x : {0.5, 1.5, 2.5}) {
    EXPECT_NEAR(information_gain(model, uni, at(x, 0.5)), log_likelihood(model, at(x, 0.5)), 1e-15);
  }
  EXPECT_THROW(information_gain(model, PriorityMap::uniform(GridGeometry{1, 3, 1}), at(0.5, 0.5)), ValidationError);
}

TEST(Auc, Examples) {
  const PriorityMap m(2, 2, {0.1, 0.2, 0.3, 0.4}, MapKind::priority);
  EXPECT_EQ(auc_uniform(m, at(1.5, 1.5)), 0.875);
  EXPECT_EQ(auc_uniform(m, at(0.5, 0.5)), 0.125);
  EXPECT_EQ(auc_uniform(PriorityMap(3, 3, std::vector<double>(9, 2.0), MapKind::priority), at(1, 1)), 0.5);
  EXPECT_THROW(auc_uniform(m, at(2.0, 0.5)), ValidationError);
}

TEST(Auc, MatchesPairwiseOracleAndStaysInUnitInterval) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 20);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> v(48);
    for (auto& x : v) x = level(rng);
    const PriorityMap m(8, 6, v, MapKind::priority);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double a = auc_uniform(m, at(i % 8 + 0.5, i / 8 + 0.5));
      EXPECT_EQ(a, oracle::auc(v, v[i]));
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  }
}

TEST(Auc, InvariantUnderStrictlyIncreasingTransforms) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> level(0, 500);
  std::vector<double> v(100);
  for (auto& x : v) x = level(rng) / 500.0;
  const PriorityMap m(10, 10, v, MapKind::priority);
  std::vector<double> cubed(v.size()), expd(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    cubed[i] = std::pow(v[i], 3) - 2.0;
    expd[i] = std::exp(3.0 * v[i]);
  }
  const PriorityMap mc(10, 10, cubed, MapKind::priority), me(10, 10, expd, MapKind::priority);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) {
      EXPECT_EQ(auc_uniform(mc, at(c + 0.5, r + 0.5)), auc_uniform(m, at(c + 0.5, r + 0.5)));
      EXPECT_EQ(auc_uniform(me, at(c + 0.5, r + 0.5)), auc_uniform(m, at(c + 0.5, r + 0.5)));
    }
  }
}

TEST(Nss, Examples) {
  const auto m = row({1, 1, 1, 5});
  EXPECT_NEAR(nss(m, at(3.5, 0.5)), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(nss(m, at(0.5, 0.5)), -1.0 / std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(nss(m, at(0.5, 0.5)), -0.5774, 5e-5);
  EXPECT_THROW(nss(row({2, 2, 2}), at(0.5, 0.5)), DegenerateMap);
}

TEST(Nss, MatchesOracleAndIsAffineInvariant) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> u(0.01, 50);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(30), w(30);
    for (auto& x : v) x = z(rng);
    const double a = u(rng), b = 100 * z(rng);
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
    const PriorityMap m(6, 5, v, MapKind::priority), mw(6, 5, w, MapKind::priority);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto f = at(i % 6 + 0.5, i / 6 + 0.5);
      EXPECT_NEAR(nss(m, f), oracle::nss(v, v[i]), 1e-12);
      EXPECT_NEAR(nss(mw, f), nss(m, f), 1e-9);
    }
  }
}

TEST(Aggregate, AveragesPerImageThenOverImages) {
  std::vector<FixationScore> s{{"A", "s", 0, 1, Metric::AUC, 0.8},
                               {"A", "s", 0, 2, Metric::AUC, 0.6},
                               {"B", "s", 1, 1, Metric::AUC, 1.0},
                               {"B", "s", 1, 1, Metric::LL, -40.0}};
  EXPECT_NEAR(aggregate(s, Metric::AUC), 0.85, 1e-15);
  EXPECT_EQ(aggregate(s, Metric::LL), -40.0);
  EXPECT_THROW(aggregate(s, Metric::NSS), ValidationError);
  std::vector<FixationScore> one{{"A", "s", 0, 1, Metric::IG, 1.0}, {"A", "t", 1, 1, Metric::IG, 2.0}};
  EXPECT_EQ(aggregate(one, Metric::IG), 1.5);
  std::vector<FixationScore> same;
  for (int i = 0; i < 7; ++i) same.push_back({"I" + std::to_string(i % 3), "s", 0, 1, Metric::NSS, 0.3});
  EXPECT_NEAR(aggregate(same, Metric::NSS), 0.3, 1e-15);
}

TEST(HistogramEqualize, Examples) {
  EXPECT_EQ(histogram_equalize(row({1, 2, 3, 4})).values(), (std::vector<double>{0.125, 0.375, 0.625, 0.875}));
  EXPECT_EQ(histogram_equalize(row({7, 7, 7})).values(), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_EQ(histogram_equalize(row({3, 1, 3, 2})).values(), (std::vector<double>{0.75, 0.125, 0.75, 0.375}));
  EXPECT_EQ(histogram_equalize(row({0.5, 0.5}, MapKind::probability)).kind(), MapKind::priority);
}

TEST(HistogramEqualize, PreservesAucExactly) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 30);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(64);
    for (auto& x : v) x = level(rng) * 0.37;
    const PriorityMap m(8, 8, v, MapKind::priority);
    const auto eq = histogram_equalize(m);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto f = at(i % 8 + 0.5, i / 8 + 0.5);
      EXPECT_EQ(auc_uniform(eq, f), auc_uniform(m, f));
    }
  }
}

TEST(ScoreTable, CsvRoundTrip) {
  std::vector<FixationScore> s{{"img 1", "s1", 0, 1, Metric::LL, 0.1 + 0.2},
                               {"img 1", "s1", 0, 2, Metric::AUC, 1.0 / 3.0},
                               {"img2", "s2", 5, 9, Metric::NSS, -1e-300}};
  std::ostringstream os;
  write_scores_csv(s, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "image_id,subject_id,scanpath_index,fixation_index,metric,value");
  std::istringstream is(os.str());
  EXPECT_EQ(read_scores_csv(is), s);
  std::istringstream bad("nope\n");
  EXPECT_THROW(read_scores_csv(bad), ValidationError);
  std::istringstream bad_row("image_id,subject_id,scanpath_index,fixation_index,metric,value\na,b,x,1,LL,0\n");
  EXPECT_THROW(read_scores_csv(bad_row), ValidationError);
}

TEST(MetricNames, ParseCaseInsensitively) {
  EXPECT_EQ(parse_metric("ll"), Metric::LL);
  EXPECT_EQ(parse_metric("Auc"), Metric::AUC);
  EXPECT_THROW(parse_metric("cc"), ValidationError);
  for (Metric m : {Metric::LL, Metric::IG, Metric::AUC, Metric::NSS}) EXPECT_EQ(parse_metric(metric_name(m)), m);
}
