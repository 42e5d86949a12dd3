#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scanbench/bench.hpp"
#include "scanbench/model_fitting.hpp"
#include "scanbench/synth.hpp"

using namespace scanbench;

namespace {

Fixation fx(double x, double y) { return Fixation{x, y, std::nullopt, false}; }

std::shared_ptr<const Dataset> small_synth(std::uint64_t seed, std::size_t images = 4, std::size_t subjects = 3) {
  SynthConfig cfg;
  cfg.n_images = images;
  cfg.n_subjects = subjects;
  cfg.fixations_per_scanpath = 8;
  cfg.width_px = 40;
  cfg.height_px = 30;
  cfg.model = {{"type", "kde_mixture"}, {"sigma_px", 3.0}, {"uniform_weight", 0.1}};
  return std::make_shared<const Dataset>(generate_synthetic_dataset(cfg, seed).dataset);
}

EvaluationRun run_of(const std::string& model, bool probabilistic, std::optional<double> ll, std::optional<double> auc) {
  EvaluationRun r;
  r.model = model;
  r.probabilistic = probabilistic;
  r.metrics = {Metric::LL, Metric::AUC};
  r.aggregates[Metric::LL] = ll;
  r.aggregates[Metric::AUC] = auc;
  return r;
}

std::string cli() { return SCANBENCH_CLI; }

}  // namespace

TEST(Evaluate, UniformModelScoresZeroAndAHalf) {
  const auto ds = small_synth(1);
  EvaluateOptions opt;
  opt.metrics = {Metric::LL, Metric::AUC};
  EvaluationRun run;
  run.metrics = opt.metrics;
  run.scores = evaluate_scores(UniformModel(), *ds, opt);
  run.recompute_aggregates();
  EXPECT_EQ(*run.value(Metric::LL), 0.0);
  EXPECT_EQ(*run.value(Metric::AUC), 0.5);
}

TEST(Evaluate, ScoresEveryVoluntaryFixationOnce) {
  Dataset ds;
  ds.stimuli.emplace("a", StimulusMeta{"a", 20, 20, 2});
  ds.scanpaths.push_back(Scanpath{"a", "s", {fx(10, 10), fx(3, 3), fx(15, 4), fx(8, 18)}, true});
  ds.scanpaths.push_back(Scanpath{"a", "t", {fx(10, 10)}, true});
  EvaluateOptions opt;
  opt.metrics = {Metric::LL, Metric::AUC};
  const auto scores = evaluate_scores(JumpModel(JumpModelParams{JumpKernel::cauchy, 4.0, 0.0}), ds, opt);
  EXPECT_EQ(scores.size(), 6u);
  for (std::size_t i = 0; i < scores.size(); ++i) EXPECT_EQ(scores[i].fixation_index, 1 + i / 2);

  const auto big = small_synth(2);
  EXPECT_EQ(evaluate_scores(UniformModel(), *big, opt).size(), 2 * big->scored_fixation_count());
}

TEST(Evaluate, ChainRuleMatchesOracle) {
  Dataset ds;
  ds.stimuli.emplace("a", StimulusMeta{"a", 32, 32, 2});
  ds.scanpaths.push_back(Scanpath{"a", "s", {fx(16, 16), fx(3.2, 5.5), fx(30.1, 29.9), fx(12.5, 7.25)}, true});
  EvaluateOptions opt;
  opt.metrics = {Metric::LL};
  const auto scores = evaluate_scores(JumpModel(JumpModelParams{JumpKernel::cauchy, 3.0, 0.0}), ds, opt);
  double sum = 0.0, ref = 0.0;
  const auto& f = ds.scanpaths[0].fixations;
  for (std::size_t i = 1; i < f.size(); ++i) {
    sum += scores[i - 1].value;
    ref += oracle::cauchy_jump_log2(32, 32, 3.0, f[i - 1].x_px, f[i - 1].y_px, f[i].x_px, f[i].y_px) + 10.0;
  }
  EXPECT_NEAR(sum, ref, 1e-9);
}

TEST(Evaluate, ParallelMatchesSerial) {
  const auto ds = small_synth(3, 6, 4);
  ModelContext ctx{ds, 1};
  const auto model = make_model("jump_gaussian", {{"scale_px", 6.0}}, ctx);
  EvaluateOptions opt;
  opt.metrics = {Metric::LL, Metric::AUC, Metric::NSS};
  const auto serial = evaluate_scores(*model, *ds, opt);
  for (int jobs : {2, 3, 8}) {
    opt.jobs = jobs;
    EXPECT_EQ(evaluate_scores(*model, *ds, opt), serial);
  }
}

TEST(Evaluate, NonProbabilisticModelsGetNoLikelihoods) {
  const auto ds = small_synth(4);
  SaliencyStore store;
  for (const auto& id : ds->image_ids()) {
    store.put(id, gaussian_kde_grid({{20, 15}}, 6.0, GridGeometry{40, 30, 1}));
  }
  EvaluateOptions opt;
  opt.saliency = &store;
  opt.metrics = {Metric::LL, Metric::AUC};
  const auto scores = evaluate_scores(SaliencyModel(), *ds, opt);
  EXPECT_EQ(scores.size(), ds->scored_fixation_count());
  for (const auto& s : scores) EXPECT_EQ(s.metric, Metric::AUC);
}

TEST(Evaluate, AucScoresInvariantUnderEqualization) {
  const auto ds = small_synth(5);
  SaliencyStore raw, eq;
  int k = 0;
  for (const auto& id : ds->image_ids()) {
    const auto m = gaussian_kde_grid({{10.0 + 5 * k, 12.0}, {30, 20}}, 4.0, GridGeometry{40, 30, 1});
    raw.put(id, m);
    eq.put(id, histogram_equalize(m));
    ++k;
  }
  EvaluateOptions opt;
  opt.metrics = {Metric::AUC};
  opt.saliency = &raw;
  const auto a = evaluate_scores(SaliencyModel(), *ds, opt);
  opt.saliency = &eq;
  EXPECT_EQ(evaluate_scores(SaliencyModel(), *ds, opt), a);
}

TEST(Evaluate, ErrorsNameTheOffendingFixation) {
  Dataset ds;
  ds.stimuli.emplace("a", StimulusMeta{"a", 10, 10, 2});
  ds.scanpaths.push_back(Scanpath{"a", "s", {fx(5, 5), fx(1, 1)}, true});
  EvaluateOptions opt;
  opt.metrics = {Metric::IG};
  try {
    evaluate_scores(UniformModel(), ds, opt);
    FAIL() << "IG without a baseline must fail";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos) << e.what();
  }
}

TEST(Models, FactoryKnowsEveryName) {
  const auto ds = small_synth(6);
  ModelContext ctx{ds, 1};
  for (const auto& name : known_models()) {
    if (name == "saliency" || name == "scenewalk") continue;
    EXPECT_EQ(make_model(name, nlohmann::json::object(), ctx)->name(), name);
  }
  EXPECT_THROW(make_model("deepgaze", nlohmann::json::object(), ctx), ValidationError);
  EXPECT_THROW(make_model("jump_cauchy", {{"scale_px", "wide"}}, ctx), ValidationError);
  const auto nested = make_model("jump_cauchy", {{"model_parameters", {{"scale_px", 9.0}}}}, ctx);
  EXPECT_EQ(static_cast<const JumpModel&>(*nested).params().scale_px, 9.0);
}

TEST(Report, SingleRunSingleRow) {
  const auto csv = report({run_of("centerbias", true, 1.23456, 0.8)}, ReportFormat::csv);
  EXPECT_EQ(csv, "model,probabilistic,LL,IG,AUC,NSS,saliency\ncenterbias,yes,1.2346,,80.0,,\n");
}

TEST(Report, OrderingAndTies) {
  const auto rows = report_rows({run_of("zeta", true, 1.0, 0.7), run_of("alpha", true, 1.0, 0.6),
                                 run_of("sal_b", false, std::nullopt, 0.81), run_of("best", true, 2.0, 0.5),
                                 run_of("sal_a", false, std::nullopt, 0.81), run_of("sal_c", false, 0.3, 0.9)});
  std::vector<std::string> names;
  for (const auto& r : rows) names.push_back(r.model);
  EXPECT_EQ(names, (std::vector<std::string>{"best", "alpha", "zeta", "sal_c", "sal_a", "sal_b"}));
  EXPECT_EQ(rows[3].ll, "");
  EXPECT_EQ(rows[3].auc, "90.0");
}

TEST(Report, MarkdownRoundTripsToCsv) {
  std::vector<EvaluationRun> runs{run_of("gs", true, 2.5, 0.88), run_of("uniform", true, 0.0, 0.5),
                                  run_of("sal", false, std::nullopt, 0.75)};
  runs[2].internal_saliency = "kde";
  const auto md = report(runs, ReportFormat::markdown);
  EXPECT_NE(md.find(kNonProbabilisticSeparator), std::string::npos);
  const auto rows = parse_markdown_report(md);
  EXPECT_EQ(rows, report_rows(runs));
  EXPECT_EQ(format_report(rows, ReportFormat::csv), report(runs, ReportFormat::csv));
  EXPECT_THROW(parse_markdown_report("| a |\n|---|\n| x | y |\n"), ValidationError);
}

TEST(Runs, JsonRoundTripAndRecomputableAggregates) {
  const auto ds = small_synth(7);
  EvaluateOptions opt;
  opt.metrics = {Metric::LL, Metric::AUC, Metric::NSS};
  EvaluationRun run;
  run.model = "jump_cauchy";
  run.metrics = opt.metrics;
  run.scores = evaluate_scores(JumpModel(JumpModelParams{JumpKernel::cauchy, 5.0, 0.0}), *ds, opt);
  run.recompute_aggregates();
  run.seed = 3;
  auto back = EvaluationRun::from_json(run.to_json());
  EXPECT_EQ(back.aggregates, run.aggregates);
  EXPECT_EQ(back.metrics, run.metrics);
  EXPECT_EQ(back.seed, 3u);
  back.scores = run.scores;
  const auto stored = back.aggregates;
  back.recompute_aggregates();
  EXPECT_EQ(back.aggregates, stored);
  EXPECT_THROW(EvaluationRun::from_json({{"metrics", {"LL"}}}), ValidationError);
}

TEST(CaseStudies, PopulationStd) {
  EXPECT_NEAR(population_std({0.9, 0.5, 0.1}), std::sqrt(0.32 / 3), 1e-15);
  EXPECT_NEAR(population_std({0.9, 0.5, 0.1}), 0.3266, 5e-5);
  EXPECT_EQ(population_std({0.4, 0.4}), 0.0);
}

namespace {

Dataset case_dataset() {
  Dataset ds;
  ds.stimuli.emplace("a", StimulusMeta{"a", 200, 200, 10});
  // amplitudes in dva: 4.9, 5.0, 5.1, then a return close to the start
  ds.scanpaths.push_back(Scanpath{"a", "s", {fx(100, 100), fx(149, 100), fx(149, 150), fx(98, 150), fx(99, 101)}, true});
  return ds;
}

std::vector<FixationScore> aucs(std::vector<double> v) {
  std::vector<FixationScore> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back({"a", "s", 0, i + 1, Metric::AUC, v[i]});
  return out;
}

}  // namespace

TEST(CaseStudies, RanksByDisagreement) {
  const auto ds = case_dataset();
  const auto r = rank_case_studies(ds, {aucs({0.9, 0.5, 0.5, 0.2}), aucs({0.1, 0.5, 0.6, 0.9})}, {});
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].fixation_index, 1u);
  EXPECT_EQ(r[1].fixation_index, 4u);
  EXPECT_EQ(r[2].fixation_index, 3u);
  EXPECT_EQ(r[3].fixation_index, 2u);
  EXPECT_NEAR(r[0].auc_std, 0.4, 1e-15);
}

TEST(CaseStudies, IdenticalRunsKeepKeyOrder) {
  const auto ds = case_dataset();
  const auto r = rank_case_studies(ds, {aucs({0.3, 0.6, 0.7, 0.2}), aucs({0.3, 0.6, 0.7, 0.2})}, {});
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(r[i].fixation_index, i + 1);
    EXPECT_EQ(r[i].auc_std, 0.0);
  }
}

TEST(CaseStudies, FiltersAreStrict) {
  const auto ds = case_dataset();
  const std::vector<std::vector<FixationScore>> runs{aucs({0.1, 0.2, 0.3, 0.4}), aucs({0.4, 0.3, 0.2, 0.1})};
  CaseStudyQuery q;
  q.min_amplitude_dva = 5.0;
  auto r = rank_case_studies(ds, runs, q);
  std::set<std::size_t> kept;
  for (const auto& e : r) kept.insert(e.fixation_index);
  EXPECT_EQ(kept, (std::set<std::size_t>{3}));
  q = {};
  q.min_distance_to_all_previous_dva = 1.0;
  r = rank_case_studies(ds, runs, q);
  kept.clear();
  for (const auto& e : r) kept.insert(e.fixation_index);
  EXPECT_EQ(kept, (std::set<std::size_t>{1, 2, 3}));
  q = {};
  q.top_k = 2;
  EXPECT_EQ(rank_case_studies(ds, runs, q).size(), 2u);
}

TEST(CaseStudies, Validation) {
  const auto ds = case_dataset();
  EXPECT_THROW(rank_case_studies(ds, {aucs({0.1, 0.2, 0.3, 0.4})}, {}), ValidationError);
  EXPECT_THROW(rank_case_studies(ds, {aucs({0.1, 0.2, 0.3, 0.4}), aucs({0.1, 0.2, 0.3})}, {}), ValidationError);
  EXPECT_THROW(rank_case_studies(ds, {aucs({0.1, 0.2, 0.3, 0.4, 0.5}), aucs({0.1, 0.2, 0.3, 0.4, 0.5})}, {}),
               ValidationError);
  CaseStudyQuery q;
  q.top_k = 0;
  EXPECT_THROW(rank_case_studies(ds, {aucs({0.1}), aucs({0.2})}, q), ValidationError);
}

TEST(Synth, CountsAndDeterminism) {
  SynthConfig cfg;
  cfg.n_images = 20;
  cfg.n_subjects = 5;
  cfg.fixations_per_scanpath = 8;
  const auto a = generate_synthetic_dataset(cfg, 17);
  EXPECT_EQ(a.dataset.scanpaths.size(), 100u);
  std::size_t fixations = 0;
  for (const auto& sp : a.dataset.scanpaths) fixations += sp.size();
  EXPECT_EQ(fixations, 800u);
  std::ostringstream x, y;
  save_dataset(a.dataset, x);
  save_dataset(generate_synthetic_dataset(cfg, 17).dataset, y);
  EXPECT_EQ(x.str(), y.str());
  std::ostringstream z;
  save_dataset(generate_synthetic_dataset(cfg, 18).dataset, z);
  EXPECT_NE(x.str(), z.str());
  cfg.model = {{"type", "nope"}};
  EXPECT_THROW(generate_synthetic_dataset(cfg, 1), ValidationError);
}

TEST(Synth, JumpScaleIsRecoverable) {
  SynthConfig cfg;
  cfg.n_images = 6;
  cfg.n_subjects = 8;
  cfg.fixations_per_scanpath = 10;
  cfg.width_px = 48;
  cfg.height_px = 48;
  cfg.model = {{"type", "jump"}, {"scale_px", 6.0}};
  const auto data = generate_synthetic_dataset(cfg, 23).dataset;
  const auto fit = fit_jump_model(data, JumpKernel::cauchy, nullptr);
  EXPECT_NEAR(fit.params.scale_px, 6.0, 0.15 * 6.0);
}

TEST(Cli, ExitCodes) {
  const auto dir = oracle::scratch_dir("cli");
  const auto quiet = " >/dev/null 2>&1";
  EXPECT_EQ(oracle::run(cli() + " --help" + quiet), 0);
  EXPECT_EQ(oracle::run(cli() + " frobnicate" + quiet), 2);
  EXPECT_EQ(oracle::run(cli() + " load --dataset " + (dir / "missing.txt").string() + quiet), 2);
  oracle::spit(dir / "cfg.json", R"({"n_images": 3, "n_subjects": 2, "fixations_per_scanpath": 4,
                                     "width_px": 32, "height_px": 24})");
  const auto data = (dir / "data.txt").string();
  ASSERT_EQ(oracle::run(cli() + " synth --config " + (dir / "cfg.json").string() + " --seed 1 --out " + data + quiet),
            0);
  EXPECT_EQ(oracle::run(cli() + " load --dataset " + data + quiet), 0);
  const auto out = (dir / "u.csv").string();
  ASSERT_EQ(oracle::run(cli() + " evaluate --dataset " + data + " --model uniform --metrics ll,auc --out " + out +
                        quiet),
            0);
  const auto run = nlohmann::json::parse(oracle::slurp(out + ".run.json"));
  EXPECT_EQ(run["aggregate"]["LL"].get<double>(), 0.0);
  EXPECT_EQ(run["aggregate"]["AUC"].get<double>(), 0.5);
  EXPECT_EQ(read_scores_csv(out).size(), 2u * 3 * 2 * 3);
  EXPECT_EQ(oracle::run(cli() + " evaluate --dataset " + data + " --model nope --out " + out + quiet), 2);
  EXPECT_EQ(oracle::run(cli() + " evaluate --dataset " + data + " --model uniform --metrics cc --out " + out + quiet),
            2);
  EXPECT_EQ(oracle::run(cli() + " report " + out + ".run.json --format markdown --out " + (dir / "r.md").string() +
                        quiet),
            0);
  EXPECT_NE(oracle::slurp(dir / "r.md").find("| uniform |"), std::string::npos);
  std::filesystem::remove_all(dir);
}
