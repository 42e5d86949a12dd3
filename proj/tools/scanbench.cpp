#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scanbench/bench.hpp"
#include "scanbench/dataset.hpp"
#include "scanbench/density.hpp"
#include "scanbench/fitting.hpp"
#include "scanbench/metrics.hpp"
#include "scanbench/model_fitting.hpp"
#include "scanbench/models.hpp"
#include "scanbench/saliency_store.hpp"
#include "scanbench/smap.hpp"
#include "scanbench/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scanbench;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  os << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct DatasetArgs {
  std::string path;
  bool inject_central = false;
  bool dedup = false;
  bool replace_invalid = false;
  bool clamp = false;

  void add_to(CLI::App* cmd, bool preprocess_flags = true) {
    cmd->add_option("--dataset", path, "Scanpath file (JSON lines)")->required();
    if (!preprocess_flags) return;
    cmd->add_flag("--inject-central", inject_central, "Prepend a central fixation to every scanpath");
    cmd->add_flag("--dedup", dedup, "Merge consecutive duplicate fixations");
    cmd->add_flag("--replace-invalid", replace_invalid, "Replace invalid initial fixations by the center");
    cmd->add_flag("--clamp", clamp, "Clamp out-of-bounds fixations instead of rejecting them");
  }

  Dataset load() const {
    LoadOptions lo;
    lo.out_of_bounds = clamp ? OutOfBoundsPolicy::clamp : OutOfBoundsPolicy::reject;
    auto ds = load_dataset(path, lo);
    if (inject_central || dedup || replace_invalid) {
      PreprocessPolicy pp;
      pp.inject_central = inject_central;
      pp.replace_invalid_initial = replace_invalid;
      pp.dedup = dedup;
      ds = preprocess_dataset(ds, pp);
    }
    return ds;
  }
};

int env_jobs(int fallback) {
  if (const char* v = std::getenv("SCANBENCH_JOBS"); v && *v) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1 || n > 4096) throw ValidationError("SCANBENCH_JOBS must be a positive integer");
    return static_cast<int>(n);
  }
  return fallback;
}

std::vector<Metric> parse_metrics(const std::string& text) {
  std::vector<Metric> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    const Metric m = parse_metric(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ValidationError("no metrics requested");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scanpath model benchmark"};
  app.require_subcommand(1);

  // load
  DatasetArgs load_ds;
  std::string load_out;
  auto* load_cmd = app.add_subcommand("load", "Validate a dataset, optionally preprocess and rewrite it");
  load_ds.add_to(load_cmd);
  load_cmd->add_option("--out", load_out, "Write the preprocessed dataset here");

  // fit-centerbias
  DatasetArgs cb_ds;
  std::string cb_params;
  std::string cb_edges;
  std::optional<double> cb_bandwidth;
  int cb_downsample = 1;
  auto* cb_cmd = app.add_subcommand("fit-centerbias", "Fit the center-bias bandwidth");
  cb_ds.add_to(cb_cmd);
  cb_cmd->add_option("--params", cb_params, "Output parameter file")->required();
  cb_cmd->add_option("--fixnum-intervals", cb_edges, "Fixation-number intervals, e.g. 1,2,3-5,6-");
  cb_cmd->add_option("--bandwidth", cb_bandwidth, "Use this bandwidth (px) instead of fitting one");
  cb_cmd->add_option("--downsample", cb_downsample, "Grid downsampling factor (power of two)");

  // fit-goldstandard
  DatasetArgs gs_ds;
  std::string gs_params;
  std::string gs_centerbias;
  int gs_downsample = 1;
  auto* gs_cmd = app.add_subcommand("fit-goldstandard", "Fit gold-standard bandwidth and mixture weights");
  gs_ds.add_to(gs_cmd);
  gs_cmd->add_option("--params", gs_params, "Output parameter file")->required();
  gs_cmd->add_option("--centerbias", gs_centerbias, "Center-bias parameter file (fitted if absent)");
  gs_cmd->add_option("--downsample", gs_downsample, "Grid downsampling factor (power of two)");

  // fit-model
  DatasetArgs fm_ds;
  std::string fm_model;
  std::string fm_params;
  std::string fm_saliency;
  std::optional<std::size_t> fm_subset;
  std::uint64_t fm_seed = 0;
  int fm_downsample = 1;
  auto* fm_cmd = app.add_subcommand("fit-model", "Fit a scanpath model by maximum likelihood");
  fm_ds.add_to(fm_cmd);
  fm_cmd->add_option("--model", fm_model, "jump_cauchy, jump_gaussian, saccadic_flow or scenewalk")->required();
  fm_cmd->add_option("--params", fm_params, "Output parameter file")->required();
  fm_cmd->add_option("--saliency-dir", fm_saliency, "Directory of <image_id>.smap files");
  fm_cmd->add_option("--subset", fm_subset, "Fit on this many randomly chosen images");
  fm_cmd->add_option("--seed", fm_seed, "Seed for --subset");
  fm_cmd->add_option("--downsample", fm_downsample, "Grid downsampling factor (power of two)");

  // evaluate
  DatasetArgs ev_ds;
  std::string ev_model;
  std::string ev_params;
  std::string ev_saliency;
  std::string ev_metrics = "ll,ig,auc,nss";
  std::string ev_out;
  std::string ev_run;
  std::string ev_centerbias;
  std::string ev_label;
  int ev_jobs = 1;
  int ev_downsample = 1;
  std::uint64_t ev_seed = 0;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score every fixation of a dataset under a model");
  ev_ds.add_to(ev_cmd);
  ev_cmd->add_option("--model", ev_model, "Model name")->required();
  ev_cmd->add_option("--params", ev_params, "Model parameter file");
  ev_cmd->add_option("--saliency-dir", ev_saliency, "Directory of <image_id>.smap files");
  ev_cmd->add_option("--metrics", ev_metrics, "Comma-separated subset of ll,ig,auc,nss");
  ev_cmd->add_option("--out", ev_out, "Score table (CSV)")->required();
  ev_cmd->add_option("--run", ev_run, "Run file (default: <out>.run.json)");
  ev_cmd->add_option("--centerbias", ev_centerbias, "Center-bias parameter file used as IG baseline");
  ev_cmd->add_option("--saliency-label", ev_label, "Internal saliency model annotation for reports");
  ev_cmd->add_option("--jobs", ev_jobs, "Worker threads")->check(CLI::PositiveNumber);
  ev_cmd->add_option("--downsample", ev_downsample, "Grid downsampling factor (power of two)");
  ev_cmd->add_option("--seed", ev_seed, "Recorded in the run provenance");

  // report
  std::vector<std::string> rp_runs;
  std::string rp_format = "markdown";
  std::string rp_out;
  auto* rp_cmd = app.add_subcommand("report", "Leaderboard table from run files");
  rp_cmd->add_option("runs", rp_runs, "Run files")->required();
  rp_cmd->add_option("--format", rp_format, "markdown or csv")->check(CLI::IsMember({"markdown", "csv"}));
  rp_cmd->add_option("--out", rp_out, "Write here instead of stdout");

  // case-studies
  std::vector<std::string> cs_runs;
  std::optional<double> cs_amplitude;
  std::optional<double> cs_no_return;
  std::size_t cs_top = 10;
  std::string cs_out;
  bool cs_no_maps = false;
  auto* cs_cmd = app.add_subcommand("case-studies", "Fixations where models disagree most");
  cs_cmd->add_option("--runs", cs_runs, "Run files (at least two)")->required()->expected(2, -1);
  cs_cmd->add_option("--min-amplitude-dva", cs_amplitude, "Keep saccades longer than this");
  cs_cmd->add_option("--no-return-dva", cs_no_return, "Keep fixations farther than this from all earlier ones");
  cs_cmd->add_option("--top", cs_top, "Number of fixations to keep");
  cs_cmd->add_option("--out", cs_out, "Output directory")->required();
  cs_cmd->add_flag("--no-maps", cs_no_maps, "Only write the index");

  // synth
  std::string sy_config;
  std::uint64_t sy_seed = 0;
  std::string sy_out;
  std::string sy_truth;
  auto* sy_cmd = app.add_subcommand("synth", "Sample a synthetic dataset");
  sy_cmd->add_option("--config", sy_config, "Generator configuration (JSON)")->required();
  sy_cmd->add_option("--seed", sy_seed, "Random seed");
  sy_cmd->add_option("--out", sy_out, "Dataset file (JSON lines)")->required();
  sy_cmd->add_option("--truth", sy_truth, "Generating parameters (default: <out>.truth.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*load_cmd) {
      const auto ds = load_ds.load();
      std::size_t fixations = 0;
      for (const auto& sp : ds.scanpaths) fixations += sp.size();
      std::printf("images %zu\nsubjects %zu\nscanpaths %zu\nfixations %zu\nscored %zu\n", ds.stimuli.size(),
                  ds.subject_ids().size(), ds.scanpaths.size(), fixations, ds.scored_fixation_count());
      if (!load_out.empty()) save_dataset(ds, load_out);
    } else if (*cb_cmd) {
      const auto ds = cb_ds.load();
      FittedBaseline baseline;
      json fit_json = nullptr;
      double bandwidth = 0.0;
      if (cb_bandwidth) {
        bandwidth = *cb_bandwidth;
      } else {
        auto [b, fit] = fit_center_bias_bandwidth(ds, cb_downsample);
        bandwidth = b.params.bandwidth_px;
        fit_json = fit.to_json();
      }
      if (!cb_edges.empty()) {
        baseline = fit_fixnum_center_bias(ds, parse_interval_edges(cb_edges), bandwidth, cb_downsample);
      } else {
        baseline = build_center_bias(ds, bandwidth, cb_downsample);
      }
      auto j = baseline.to_json();
      j["downsample"] = cb_downsample;
      j["log_likelihood"] = baseline_log_likelihood(ds, baseline);
      j["fit"] = fit_json;
      write_json(cb_params, j);
      std::printf("bandwidth_px %.6g\nLL %.4f\n", bandwidth, j["log_likelihood"].get<double>());
    } else if (*gs_cmd) {
      const auto ds = gs_ds.load();
      double cb_bandwidth_px = 0.0;
      if (!gs_centerbias.empty()) {
        cb_bandwidth_px = FittedBaseline::from_json(read_json(gs_centerbias)).params.bandwidth_px;
      } else {
        cb_bandwidth_px = fit_center_bias_bandwidth(ds, gs_downsample).first.params.bandwidth_px;
      }
      const auto cb = build_center_bias(ds, cb_bandwidth_px, gs_downsample);
      const auto fit = fit_gold_standard(ds, cb, gs_downsample);
      json j = {{"bandwidth_px", fit.params.bandwidth_px},
                {"uniform_weight", fit.params.uniform_weight},
                {"centerbias_weight", fit.params.centerbias_weight},
                {"centerbias_bandwidth_px", cb_bandwidth_px},
                {"downsample", gs_downsample},
                {"loso_log_likelihood", fit.loso_ll},
                {"joint_log_likelihood", fit.joint_ll},
                {"fit", fit.fit.to_json()}};
      write_json(gs_params, j);
      std::printf("bandwidth_px %.6g\nLL_loso %.4f\nLL_joint %.4f\n", fit.params.bandwidth_px, fit.loso_ll,
                  fit.joint_ll);
    } else if (*fm_cmd) {
      auto ds = fm_ds.load();
      std::optional<std::uint64_t> seed;
      if (fm_subset) {
        ds = subset_sample(ds, *fm_subset, fm_seed);
        seed = fm_seed;
      }
      SaliencyStore store;
      if (!fm_saliency.empty()) store = SaliencyStore::load(fm_saliency, ds, fm_downsample);
      json model_params;
      FitResult fit;
      if (fm_model == "jump_cauchy" || fm_model == "jump_gaussian") {
        const auto r = fit_jump_model(ds, fm_model == "jump_cauchy" ? JumpKernel::cauchy : JumpKernel::gaussian,
                                      &store, fm_downsample);
        model_params = {{"scale_px", r.params.scale_px}, {"saliency_exponent", r.params.saliency_exponent}};
        fit = r.fit;
      } else if (fm_model == "saccadic_flow") {
        const auto p = fit_saccadic_flow(normalized_saccades(ds));
        model_params = p.to_json();
        fit.objective = mean_log_likelihood(SaccadicFlowModel(p), ds, nullptr, fm_downsample);
        fit.split = "none";
      } else if (fm_model == "scenewalk") {
        if (store.empty()) throw ValidationError("scenewalk needs --saliency-dir");
        const auto r = fit_scenewalk(ds, store, fm_downsample);
        model_params = r.params.to_json();
        fit = r.fit;
      } else {
        throw ValidationError("fit-model does not support '" + fm_model + "'");
      }
      fit.seed = seed;
      auto j = fit.to_json();
      j["model"] = fm_model;
      j["model_parameters"] = model_params;
      j["downsample"] = fm_downsample;
      write_json(fm_params, j);
      std::printf("LL %.4f\n", fit.objective);
    } else if (*ev_cmd) {
      auto ds = std::make_shared<const Dataset>(ev_ds.load());
      EvaluateOptions opt;
      opt.metrics = parse_metrics(ev_metrics);
      opt.jobs = env_jobs(ev_jobs);
      opt.downsample = ev_downsample;
      const json params = ev_params.empty() ? json::object() : read_json(ev_params);
      ModelContext ctx{ds, ev_downsample};
      const auto model = make_model(ev_model, params, ctx);
      SaliencyStore store;
      if (!ev_saliency.empty()) store = SaliencyStore::load(ev_saliency, *ds, ev_downsample);
      if (model->needs_saliency() && store.empty()) throw ValidationError(ev_model + " needs --saliency-dir");
      opt.saliency = &store;
      if (model->probabilistic() && std::find(opt.metrics.begin(), opt.metrics.end(), Metric::IG) != opt.metrics.end()) {
        std::optional<double> bw;
        if (!ev_centerbias.empty()) bw = FittedBaseline::from_json(read_json(ev_centerbias)).params.bandwidth_px;
        opt.ig_baseline = center_bias_for(ctx, bw);
      }

      EvaluationRun run;
      run.dataset_name = ds->name;
      run.dataset_path = ev_ds.path;
      run.model = ev_model;
      run.params_path = ev_params;
      run.saliency_dir = ev_saliency;
      run.internal_saliency = ev_label;
      run.probabilistic = model->probabilistic();
      run.metrics = opt.metrics;
      run.downsample = ev_downsample;
      run.scores = evaluate_scores(*model, *ds, opt);
      run.recompute_aggregates();
      run.scores_path = fs::absolute(ev_out).lexically_normal().string();
      run.seed = ev_seed;
      std::uint64_t h = fnv1a(read_file(ev_ds.path));
      h = fnv1a(ev_model + '\n' + (ev_params.empty() ? "" : read_file(ev_params)) + '\n' + ev_metrics + '\n' +
                    std::to_string(ev_downsample) + '\n' + std::to_string(ev_seed) + '\n' +
                    (ev_centerbias.empty() ? "" : read_file(ev_centerbias)),
                h);
      run.config_hash = hex64(h);
      run.timestamp = utc_timestamp();

      if (const auto parent = fs::path(ev_out).parent_path(); !parent.empty()) fs::create_directories(parent);
      write_scores_csv(run.scores, ev_out);
      auto run_json = run.to_json();
      run_json["dataset_path"] = fs::absolute(ev_ds.path).lexically_normal().string();
      if (!ev_params.empty()) run_json["params_path"] = fs::absolute(ev_params).lexically_normal().string();
      if (!ev_saliency.empty()) run_json["saliency_dir"] = fs::absolute(ev_saliency).lexically_normal().string();
      run_json["preprocess"] = {{"inject_central", ev_ds.inject_central},
                                {"dedup", ev_ds.dedup},
                                {"replace_invalid", ev_ds.replace_invalid},
                                {"clamp", ev_ds.clamp}};
      if (!ev_centerbias.empty()) run_json["centerbias_path"] = fs::absolute(ev_centerbias).lexically_normal().string();
      write_json(ev_run.empty() ? ev_out + ".run.json" : ev_run, run_json);
      for (Metric m : run.metrics) {
        const auto v = run.value(m);
        if (v) {
          std::printf("%s %.4f\n", metric_name(m), *v);
        } else {
          std::printf("%s n/a\n", metric_name(m));
        }
      }
    } else if (*rp_cmd) {
      std::vector<EvaluationRun> runs;
      for (const auto& p : rp_runs) runs.push_back(EvaluationRun::from_json(read_json(p)));
      const auto text = report(runs, rp_format == "csv" ? ReportFormat::csv : ReportFormat::markdown);
      if (rp_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        write_text(rp_out, text);
      }
    } else if (*cs_cmd) {
      std::vector<json> run_json;
      std::vector<std::vector<FixationScore>> scores;
      for (const auto& p : cs_runs) {
        run_json.push_back(read_json(p));
        const auto run = EvaluationRun::from_json(run_json.back());
        scores.push_back(read_scores_csv(run.scores_path));
      }
      const auto& first = run_json.front();
      for (const auto& r : run_json) {
        if (r.value("dataset_path", "") != first.value("dataset_path", "")) {
          throw ValidationError("case-study runs use different datasets");
        }
      }
      DatasetArgs dargs;
      dargs.path = first.at("dataset_path").get<std::string>();
      const auto pre = first.value("preprocess", json::object());
      dargs.inject_central = pre.value("inject_central", false);
      dargs.dedup = pre.value("dedup", false);
      dargs.replace_invalid = pre.value("replace_invalid", false);
      dargs.clamp = pre.value("clamp", false);
      auto ds = std::make_shared<const Dataset>(dargs.load());

      CaseStudyQuery query;
      query.min_amplitude_dva = cs_amplitude;
      query.min_distance_to_all_previous_dva = cs_no_return;
      query.top_k = cs_top;
      const auto entries = rank_case_studies(*ds, scores, query);

      fs::create_directories(cs_out);
      json index = json::array();
      for (std::size_t e = 0; e < entries.size(); ++e) {
        const auto& entry = entries[e];
        const auto& sp = ds->scanpaths[entry.scanpath_index];
        json item = {{"rank", e + 1},
                     {"image_id", entry.image_id},
                     {"subject_id", entry.subject_id},
                     {"scanpath_index", entry.scanpath_index},
                     {"fixation_index", entry.fixation_index},
                     {"auc_std", entry.auc_std},
                     {"amplitude_dva", entry.amplitude_dva},
                     {"min_previous_distance_dva", entry.min_previous_distance_dva},
                     {"fixation", {sp.fixations[entry.fixation_index].x_px, sp.fixations[entry.fixation_index].y_px}},
                     {"models", json::array()}};
        for (std::size_t r = 0; r < run_json.size(); ++r) {
          const auto run = EvaluationRun::from_json(run_json[r]);
          json m = {{"model", run.model}, {"auc", entry.aucs[r]}};
          if (!cs_no_maps) {
            const json params = run.params_path.empty() ? json::object() : read_json(run.params_path);
            const auto model = make_model(run.model, params, ModelContext{ds, run.downsample});
            SaliencyStore store;
            if (!run.saliency_dir.empty()) {
              const Dataset one{ds->name, {{entry.image_id, ds->stimulus(entry.image_id)}}, {}};
              store = SaliencyStore::load(run.saliency_dir, one, run.downsample);
            }
            const auto stimulus = make_stimulus(*ds, sp, run.downsample, &store, model->needs_saliency());
            const std::vector<Fixation> history(sp.fixations.begin(),
                                                sp.fixations.begin() + static_cast<long>(entry.fixation_index));
            const auto eq = histogram_equalize(conditional_prediction(*model, stimulus, history));
            char stem[64];
            std::snprintf(stem, sizeof(stem), "%03zu_%02zu_", e + 1, r);
            const std::string base = std::string(stem) + run.model;
            write_smap(eq, (fs::path(cs_out) / (base + ".smap")).string());
            write_pgm(eq, (fs::path(cs_out) / (base + ".pgm")).string());
            m["smap"] = base + ".smap";
            m["pgm"] = base + ".pgm";
          }
          item["models"].push_back(m);
        }
        index.push_back(item);
        std::printf("%zu %s %s %zu %zu std=%.4f\n", e + 1, entry.image_id.c_str(), entry.subject_id.c_str(),
                    entry.scanpath_index, entry.fixation_index, entry.auc_std);
      }
      write_json((fs::path(cs_out) / "index.json").string(), index);
    } else if (*sy_cmd) {
      const auto config = SynthConfig::from_json(read_json(sy_config));
      const auto result = generate_synthetic_dataset(config, sy_seed);
      save_dataset(result.dataset, sy_out);
      write_json(sy_truth.empty() ? sy_out + ".truth.json" : sy_truth, result.truth);
      std::printf("scanpaths %zu\n", result.dataset.scanpaths.size());
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
