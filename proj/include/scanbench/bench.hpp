#ifndef SCANBENCH_BENCH_HPP
#define SCANBENCH_BENCH_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "density.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "saliency_store.hpp"

namespace scanbench {

// ---------------------------------------------------------------------------
// Model construction from names and parameter files

struct ModelContext {
  std::shared_ptr<const Dataset> dataset;
  int downsample = 1;
};

/// Center-bias bandwidth used when no fitted value is supplied.
inline double default_center_bias_bandwidth(const Dataset& ds) {
  const auto& meta = ds.stimuli.begin()->second;
  return 0.07 * std::max(meta.width_px, meta.height_px);
}

inline std::shared_ptr<const FittedBaseline> center_bias_for(const ModelContext& ctx,
                                                             std::optional<double> bandwidth_px) {
  return std::make_shared<const FittedBaseline>(build_center_bias(
      *ctx.dataset, bandwidth_px.value_or(default_center_bias_bandwidth(*ctx.dataset)), ctx.downsample));
}

inline std::vector<std::string> known_models() {
  return {"uniform",     "centerbias",   "fixnum_centerbias", "goldstandard_loso", "goldstandard_joint",
          "jump_cauchy", "jump_gaussian", "saccadic_flow",    "scenewalk",         "saliency"};
}

/// Builds a model by name. `params` is either a model parameter object or a
/// fit-result file carrying it under "model_parameters"; baseline files use
/// their own top-level keys.
inline std::unique_ptr<ConditionalModel> make_model(const std::string& name, const nlohmann::json& params,
                                                    const ModelContext& ctx) {
  const nlohmann::json& p =
      params.is_object() && params.contains("model_parameters") ? params["model_parameters"] : params;
  auto opt_double = [&](const char* key) -> std::optional<double> {
    if (p.is_object() && p.contains(key) && !p[key].is_null()) return p[key].get<double>();
    return std::nullopt;
  };
  try {
    if (name == "uniform") return std::make_unique<UniformModel>();
    if (name == "saliency") return std::make_unique<SaliencyModel>(p.is_object() ? p.value("label", name) : name);
    if (name == "centerbias") {
      return std::make_unique<CenterBiasModel>(center_bias_for(ctx, opt_double("bandwidth_px")));
    }
    if (name == "fixnum_centerbias") {
      std::vector<std::size_t> edges{1, 2, 3, 6};
      if (p.is_object() && p.contains("interval_edges")) edges = p["interval_edges"].get<std::vector<std::size_t>>();
      return std::make_unique<CenterBiasModel>(std::make_shared<const FittedBaseline>(fit_fixnum_center_bias(
          *ctx.dataset, edges, opt_double("bandwidth_px").value_or(default_center_bias_bandwidth(*ctx.dataset)),
          ctx.downsample)));
    }
    if (name == "goldstandard_loso" || name == "goldstandard_joint") {
      KdeParams kp;
      kp.bandwidth_px = opt_double("bandwidth_px").value_or(default_center_bias_bandwidth(*ctx.dataset) / 2.0);
      kp.uniform_weight = opt_double("uniform_weight").value_or(0.05);
      kp.centerbias_weight = opt_double("centerbias_weight").value_or(0.05);
      return std::make_unique<GoldStandardModel>(ctx.dataset, kp,
                                                 center_bias_for(ctx, opt_double("centerbias_bandwidth_px")),
                                                 name == "goldstandard_joint");
    }
    if (name == "jump_cauchy" || name == "jump_gaussian") {
      JumpModelParams jp;
      jp.kernel = name == "jump_cauchy" ? JumpKernel::cauchy : JumpKernel::gaussian;
      jp.scale_px = opt_double("scale_px").value_or(jp.scale_px);
      jp.saliency_exponent = opt_double("saliency_exponent").value_or(0.0);
      return std::make_unique<JumpModel>(jp);
    }
    if (name == "saccadic_flow") {
      return std::make_unique<SaccadicFlowModel>(p.is_object() && p.contains("mean_x")
                                                     ? SaccadicFlowParams::from_json(p)
                                                     : SaccadicFlowParams{});
    }
    if (name == "scenewalk") {
      return std::make_unique<SceneWalkModel>(p.is_object() ? SceneWalkParams::from_json(p) : SceneWalkParams{});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad parameters for model '" + name + "': " + e.what());
  }
  throw ValidationError("unknown model '" + name + "'");
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvaluateOptions {
  std::vector<Metric> metrics{Metric::LL, Metric::IG, Metric::AUC, Metric::NSS};
  int jobs = 1;
  int downsample = 1;
  const SaliencyStore* saliency = nullptr;
  // Baseline for IG; required when IG is requested for a probabilistic model.
  std::shared_ptr<const FittedBaseline> ig_baseline;
};

namespace detail {

inline std::vector<FixationScore> score_scanpath(const ConditionalModel& model, const Dataset& ds, std::size_t index,
                                                 const EvaluateOptions& opt) {
  const auto& sp = ds.scanpaths[index];
  std::vector<FixationScore> out;
  if (sp.size() < 2) return out;
  std::size_t fixation = 0;
  try {
    const auto stimulus = make_stimulus(ds, sp, opt.downsample, opt.saliency, model.needs_saliency());
    auto state = model.initialize(stimulus, sp.fixations.front());
    for (fixation = 1; fixation < sp.size(); ++fixation) {
      const auto& fix = sp.fixations[fixation];
      const auto map = model.compute_priority_map(*state);
      auto add = [&](Metric m, double v) { out.push_back({sp.image_id, sp.subject_id, index, fixation, m, v}); };
      for (Metric m : opt.metrics) {
        switch (m) {
          case Metric::LL:
            if (model.probabilistic()) add(m, log_likelihood(map, fix));
            break;
          case Metric::IG:
            if (model.probabilistic()) {
              if (!opt.ig_baseline) throw ValidationError("IG requested without a center-bias baseline");
              add(m, information_gain(map, opt.ig_baseline->grid(sp.image_id), fix));
            }
            break;
          case Metric::AUC: add(m, auc_uniform(map, fix)); break;
          case Metric::NSS:
            // constant maps have no NSS; the row is left out rather than scored 0
            try {
              add(m, nss(map, fix));
            } catch (const DegenerateMap&) {
            }
            break;
        }
      }
      model.update_state(*state, fix);
    }
  } catch (const ValidationError& e) {
    throw ValidationError("image '" + sp.image_id + "', scanpath " + std::to_string(index) + ", fixation " +
                          std::to_string(fixation) + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error("image '" + sp.image_id + "', scanpath " + std::to_string(index) + ", fixation " +
                             std::to_string(fixation) + ": " + e.what());
  }
  return out;
}

}  // namespace detail

/// Scores every fixation with index >= 1 given its preceding history. Work is
/// split over scanpaths; results are merged in scanpath order, so the output
/// does not depend on `jobs`.
inline std::vector<FixationScore> evaluate_scores(const ConditionalModel& model, const Dataset& ds,
                                                  const EvaluateOptions& opt) {
  const std::size_t n = ds.scanpaths.size();
  std::vector<std::vector<FixationScore>> parts(n);
  std::vector<std::exception_ptr> errors(n);
  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        parts[i] = detail::score_scanpath(model, ds, i, opt);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<FixationScore> out;
  for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

struct EvaluationRun {
  std::string dataset_name;
  std::string dataset_path;
  std::string model;
  std::string params_path;
  std::string saliency_dir;
  std::string internal_saliency;
  bool probabilistic = true;
  std::vector<Metric> metrics;
  int downsample = 1;
  std::vector<FixationScore> scores;
  std::string scores_path;
  std::map<Metric, std::optional<double>> aggregates;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string timestamp;

  /// Aggregates recomputed from the score table.
  void recompute_aggregates() {
    aggregates.clear();
    for (Metric m : metrics) {
      const bool any = std::any_of(scores.begin(), scores.end(), [m](const auto& s) { return s.metric == m; });
      aggregates[m] = any ? std::optional<double>(aggregate(scores, m)) : std::nullopt;
    }
  }

  std::optional<double> value(Metric m) const {
    auto it = aggregates.find(m);
    return it == aggregates.end() ? std::nullopt : it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json agg = nlohmann::json::object();
    for (const auto& [m, v] : aggregates) agg[metric_name(m)] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    std::vector<std::string> names;
    for (Metric m : metrics) names.push_back(metric_name(m));
    return {{"dataset", dataset_name},
            {"dataset_path", dataset_path},
            {"model", model},
            {"params_path", params_path},
            {"saliency_dir", saliency_dir},
            {"internal_saliency", internal_saliency},
            {"probabilistic", probabilistic},
            {"metrics", names},
            {"downsample", downsample},
            {"scores_path", scores_path},
            {"scored_fixations", scores.empty() ? 0 : scores.size() / std::max<std::size_t>(1, metrics.size())},
            {"aggregate", agg},
            {"provenance", {{"seed", seed}, {"config_hash", config_hash}, {"timestamp", timestamp}}}};
  }

  static EvaluationRun from_json(const nlohmann::json& j) {
    EvaluationRun r;
    try {
      r.dataset_name = j.value("dataset", "");
      r.dataset_path = j.value("dataset_path", "");
      r.model = j.at("model").get<std::string>();
      r.params_path = j.value("params_path", "");
      r.saliency_dir = j.value("saliency_dir", "");
      r.internal_saliency = j.value("internal_saliency", "");
      r.probabilistic = j.value("probabilistic", true);
      const auto names = j.value("metrics", std::vector<std::string>{});
      for (const auto& m : names) r.metrics.push_back(parse_metric(m));
      r.downsample = j.value("downsample", 1);
      r.scores_path = j.value("scores_path", "");
      const auto agg = j.value("aggregate", nlohmann::json::object());
      for (const auto& [k, v] : agg.items()) {
        r.aggregates[parse_metric(k)] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      }
      if (j.contains("provenance")) {
        const auto& p = j["provenance"];
        r.seed = p.value("seed", std::uint64_t{0});
        r.config_hash = p.value("config_hash", "");
        r.timestamp = p.value("timestamp", "");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad run file: ") + e.what());
    }
    return r;
  }
};

/// 64-bit FNV-1a, used for run provenance hashes.
inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Leaderboard report

enum class ReportFormat { csv, markdown };

struct ReportRow {
  std::string model;
  bool probabilistic = true;
  std::string ll, ig, auc, nss;
  std::string saliency;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

namespace detail {

inline std::string fmt_fixed(std::optional<double> v, int digits, double scale = 1.0) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, *v * scale);
  return buf;
}

}  // namespace detail

/// Probabilistic runs sorted by LL (descending), then non-probabilistic runs
/// by AUC; ties broken by model name.
inline std::vector<ReportRow> report_rows(const std::vector<EvaluationRun>& runs) {
  std::vector<const EvaluationRun*> order;
  for (const auto& r : runs) order.push_back(&r);
  const double lowest = -std::numeric_limits<double>::infinity();
  std::stable_sort(order.begin(), order.end(), [&](const EvaluationRun* a, const EvaluationRun* b) {
    if (a->probabilistic != b->probabilistic) return a->probabilistic;
    const Metric key = a->probabilistic ? Metric::LL : Metric::AUC;
    const double va = a->value(key).value_or(lowest);
    const double vb = b->value(key).value_or(lowest);
    if (va != vb) return va > vb;
    return a->model < b->model;
  });
  std::vector<ReportRow> rows;
  for (const auto* r : order) {
    ReportRow row;
    row.model = r->model;
    row.probabilistic = r->probabilistic;
    if (r->probabilistic) {
      row.ll = detail::fmt_fixed(r->value(Metric::LL), 4);
      row.ig = detail::fmt_fixed(r->value(Metric::IG), 4);
    }
    row.auc = detail::fmt_fixed(r->value(Metric::AUC), 1, 100.0);
    row.nss = detail::fmt_fixed(r->value(Metric::NSS), 4);
    row.saliency = r->internal_saliency;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline constexpr const char* kNonProbabilisticSeparator = "*non-probabilistic models*";

inline std::string format_report(const std::vector<ReportRow>& rows, ReportFormat format) {
  std::ostringstream os;
  if (format == ReportFormat::csv) {
    os << "model,probabilistic,LL,IG,AUC,NSS,saliency\n";
    for (const auto& r : rows) {
      os << r.model << ',' << (r.probabilistic ? "yes" : "no") << ',' << r.ll << ',' << r.ig << ',' << r.auc << ','
         << r.nss << ',' << r.saliency << '\n';
    }
    return os.str();
  }
  os << "| Model | LL | IG | AUC | NSS | Saliency |\n";
  os << "|:--|--:|--:|--:|--:|:--|\n";
  bool separated = false;
  for (const auto& r : rows) {
    if (!r.probabilistic && !separated) {
      os << "| " << kNonProbabilisticSeparator << " | | | | | |\n";
      separated = true;
    }
    os << "| " << r.model << " | " << r.ll << " | " << r.ig << " | " << r.auc << " | " << r.nss << " | "
       << r.saliency << " |\n";
  }
  return os.str();
}

inline std::string report(const std::vector<EvaluationRun>& runs, ReportFormat format) {
  return format_report(report_rows(runs), format);
}

/// Reads a markdown report back into rows.
inline std::vector<ReportRow> parse_markdown_report(const std::string& text) {
  std::vector<ReportRow> rows;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  bool probabilistic = true;
  while (std::getline(is, line)) {
    if (++lineno <= 2 || line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 1;
    for (std::size_t pos; (pos = line.find('|', start)) != std::string::npos; start = pos + 1) {
      std::string cell = line.substr(start, pos - start);
      const auto b = cell.find_first_not_of(' ');
      const auto e = cell.find_last_not_of(' ');
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (cells.size() != 6) throw ValidationError("malformed report row: " + line);
    if (cells[0] == kNonProbabilisticSeparator) {
      probabilistic = false;
      continue;
    }
    rows.push_back({cells[0], probabilistic, cells[1], cells[2], cells[3], cells[4], cells[5]});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Case studies

struct CaseStudyQuery {
  // Keep fixations whose saccade amplitude is strictly above this (dva).
  std::optional<double> min_amplitude_dva;
  // Keep fixations strictly farther than this from every earlier fixation (dva).
  std::optional<double> min_distance_to_all_previous_dva;
  std::size_t top_k = 10;

  void validate() const {
    if (top_k < 1) throw ValidationError("top_k must be at least 1");
    if ((min_amplitude_dva && *min_amplitude_dva < 0.0) ||
        (min_distance_to_all_previous_dva && *min_distance_to_all_previous_dva < 0.0)) {
      throw ValidationError("case-study thresholds must be nonnegative");
    }
  }
};

struct CaseStudyEntry {
  std::string image_id;
  std::string subject_id;
  std::size_t scanpath_index = 0;
  std::size_t fixation_index = 0;
  double auc_std = 0.0;
  std::vector<double> aucs;  // one per run, in run order
  double amplitude_dva = 0.0;
  double min_previous_distance_dva = 0.0;
};

inline double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

/// Ranks fixations by the population std of their AUC across runs, after the
/// amplitude and return-saccade filters. Ties keep (scanpath, fixation) order.
inline std::vector<CaseStudyEntry> rank_case_studies(const Dataset& ds,
                                                     const std::vector<std::vector<FixationScore>>& run_scores,
                                                     const CaseStudyQuery& query) {
  query.validate();
  if (run_scores.size() < 2) throw ValidationError("case studies need at least two runs");
  using Key = std::pair<std::size_t, std::size_t>;
  std::vector<std::map<Key, double>> aucs(run_scores.size());
  for (std::size_t r = 0; r < run_scores.size(); ++r) {
    for (const auto& s : run_scores[r]) {
      if (s.metric == Metric::AUC) aucs[r][{s.scanpath_index, s.fixation_index}] = s.value;
    }
  }
  for (std::size_t r = 1; r < aucs.size(); ++r) {
    if (aucs[r].size() != aucs[0].size() ||
        !std::equal(aucs[r].begin(), aucs[r].end(), aucs[0].begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw ValidationError("runs cover different fixations");
    }
  }
  if (aucs[0].empty()) throw ValidationError("runs contain no AUC scores");

  std::vector<CaseStudyEntry> entries;
  for (const auto& [key, unused] : aucs[0]) {
    const auto [s, i] = key;
    if (s >= ds.scanpaths.size() || i == 0 || i >= ds.scanpaths[s].size()) {
      throw ValidationError("score key does not exist in the dataset");
    }
    const auto& sp = ds.scanpaths[s];
    const auto& meta = ds.stimulus(sp.image_id);
    CaseStudyEntry e;
    e.image_id = sp.image_id;
    e.subject_id = sp.subject_id;
    e.scanpath_index = s;
    e.fixation_index = i;
    e.amplitude_dva = saccade_amplitude_dva(sp.fixations[i - 1], sp.fixations[i], meta);
    e.min_previous_distance_dva = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < i; ++j) {
      e.min_previous_distance_dva =
          std::min(e.min_previous_distance_dva, saccade_amplitude_dva(sp.fixations[j], sp.fixations[i], meta));
    }
    if (query.min_amplitude_dva && !(e.amplitude_dva > *query.min_amplitude_dva)) continue;
    if (query.min_distance_to_all_previous_dva &&
        !(e.min_previous_distance_dva > *query.min_distance_to_all_previous_dva)) {
      continue;
    }
    for (const auto& run : aucs) e.aucs.push_back(run.at(key));
    e.auc_std = population_std(e.aucs);
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const CaseStudyEntry& a, const CaseStudyEntry& b) { return a.auc_std > b.auc_std; });
  if (entries.size() > query.top_k) entries.resize(query.top_k);
  return entries;
}

/// Binary PGM (P5) of a map with values in [0, 1].
inline void write_pgm(const PriorityMap& map, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  os << "P5\n" << map.width() << ' ' << map.height() << "\n255\n";
  for (double v : map.values()) {
    os.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
}

}  // namespace scanbench

#endif  // SCANBENCH_BENCH_HPP
