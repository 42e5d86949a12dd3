#ifndef SCANBENCH_DENSITY_HPP
#define SCANBENCH_DENSITY_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fitting.hpp"
#include "metrics.hpp"
#include "types.hpp"

namespace scanbench {

/// Uniform weight mixed into every center-bias grid.
inline constexpr double kCenterBiasFloor = 0.01;

/// Kernels are cut off where exp(-r^2 / 2 sigma^2) drops below 2^-35.
inline constexpr double kKernelRadiusSigmas = 7.0;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct KdeParams {
  double bandwidth_px = 1.0;
  double uniform_weight = 0.0;
  double centerbias_weight = 0.0;

  double kde_weight() const { return 1.0 - uniform_weight - centerbias_weight; }

  void validate() const {
    if (!(bandwidth_px > 0.0) || !std::isfinite(bandwidth_px)) throw ValidationError("bandwidth must be positive");
    if (uniform_weight < 0.0 || centerbias_weight < 0.0 || uniform_weight + centerbias_weight > 1.0 + 1e-12) {
      throw ValidationError("mixture weights must be nonnegative and sum to at most 1");
    }
  }

  static KdeParams from_dva(double bandwidth_dva, const StimulusMeta& meta, double uniform_weight = 0.0,
                            double centerbias_weight = 0.0) {
    return {bandwidth_dva * meta.px_per_dva, uniform_weight, centerbias_weight};
  }
};

namespace detail {

/// Windowed 1D Gaussian profile over cell centers along one axis.
struct AxisKernel {
  int first = 0;
  std::vector<double> weights;
};

inline AxisKernel axis_kernel(double mu, double sigma, int cells, int downsample) {
  AxisKernel k;
  const double radius = kKernelRadiusSigmas * sigma;
  const int lo = std::max(0, static_cast<int>(std::floor((mu - radius) / downsample)));
  const int hi = std::min(cells - 1, static_cast<int>(std::floor((mu + radius) / downsample)));
  if (hi < lo) return k;
  k.first = lo;
  k.weights.resize(static_cast<std::size_t>(hi - lo + 1));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int i = lo; i <= hi; ++i) {
    const double d = (i + 0.5) * downsample - mu;
    k.weights[static_cast<std::size_t>(i - lo)] = std::exp(-d * d * inv);
  }
  return k;
}

/// Adds an unnormalized isotropic Gaussian at (x, y) to a raw grid.
inline void add_gaussian(std::vector<double>& grid, const GridGeometry& g, double x, double y, double sigma,
                         double weight = 1.0) {
  const auto kx = axis_kernel(x, sigma, g.cols(), g.downsample);
  const auto ky = axis_kernel(y, sigma, g.rows(), g.downsample);
  const std::size_t cols = static_cast<std::size_t>(g.cols());
  for (std::size_t j = 0; j < ky.weights.size(); ++j) {
    const double wy = weight * ky.weights[j];
    double* row = grid.data() + (static_cast<std::size_t>(ky.first) + j) * cols + kx.first;
    for (std::size_t i = 0; i < kx.weights.size(); ++i) row[i] += wy * kx.weights[i];
  }
}

inline std::vector<double> raw_kde(const std::vector<Point2>& points, double sigma, const GridGeometry& g) {
  std::vector<double> grid(g.cells(), 0.0);
  for (const auto& p : points) add_gaussian(grid, g, p.x, p.y, sigma);
  return grid;
}

/// Convex combination of a normalized raw grid with the uniform map and an optional center bias.
inline PriorityMap mix_with_baselines(const std::vector<double>& raw, double raw_weight, double uniform_weight,
                                      const PriorityMap* centerbias, double centerbias_weight,
                                      const GridGeometry& g) {
  const double uniform = 1.0 / static_cast<double>(g.cells());
  double total = 0.0;
  for (double v : raw) total += v;
  if (raw_weight > 0.0 && !(total > 0.0)) {
    throw ValidationError("kernel density has no mass on the grid (bandwidth too small for the grid resolution)");
  }
  std::vector<double> out(g.cells());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = uniform_weight * uniform;
    if (raw_weight > 0.0) v += raw_weight * raw[i] / total;
    if (centerbias && centerbias_weight > 0.0) v += centerbias_weight * (*centerbias)[i];
    out[i] = v;
  }
  return PriorityMap::from_weights(g, std::move(out));
}

}  // namespace detail

/// Equal-weight Gaussian mixture at cell centers, truncated to the image and renormalized.
inline PriorityMap gaussian_kde_grid(const std::vector<Point2>& points, double bandwidth_px,
                                     const GridGeometry& geometry) {
  if (points.empty()) throw ValidationError("kernel density estimate needs at least one point");
  if (!(bandwidth_px > 0.0)) throw ValidationError("bandwidth must be positive");
  return detail::mix_with_baselines(detail::raw_kde(points, bandwidth_px, geometry), 1.0, 0.0, nullptr, 0.0,
                                    geometry);
}

/// Half-open range of fixation indices [first, last); last = nullopt means unbounded.
struct FixationInterval {
  std::size_t first = 1;
  std::optional<std::size_t> last;

  bool contains(std::size_t index) const { return index >= first && (!last || index < *last); }
};

/// Turns interval start indices, e.g. {1, 2, 3, 6}, into a partition of [1, inf).
inline std::vector<FixationInterval> intervals_from_edges(const std::vector<std::size_t>& edges) {
  if (edges.empty() || edges.front() != 1) throw ValidationError("fixation intervals must start at index 1");
  std::vector<FixationInterval> out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i + 1 < edges.size() && edges[i + 1] <= edges[i]) {
      throw ValidationError("fixation interval edges must be strictly increasing");
    }
    out.push_back({edges[i], i + 1 < edges.size() ? std::optional<std::size_t>(edges[i + 1]) : std::nullopt});
  }
  return out;
}

/// Parses "1,2,3-5,6-" into interval start edges {1, 2, 3, 6}.
inline std::vector<std::size_t> parse_interval_edges(const std::string& text) {
  std::vector<std::size_t> edges;
  std::stringstream ss(text);
  std::string item;
  std::optional<std::size_t> expected;
  bool open_ended = false;
  while (std::getline(ss, item, ',')) {
    if (open_ended) throw ValidationError("only the last fixation interval may be open-ended");
    const auto dash = item.find('-');
    try {
      const std::size_t lo = std::stoul(item.substr(0, dash));
      if (expected && lo != *expected) throw ValidationError("fixation intervals must be contiguous");
      edges.push_back(lo);
      if (dash == std::string::npos) {
        expected = lo + 1;
      } else if (dash + 1 == item.size()) {
        open_ended = true;
      } else {
        expected = std::stoul(item.substr(dash + 1)) + 1;
      }
    } catch (const std::logic_error&) {
      throw ValidationError("cannot parse fixation interval '" + item + "'");
    }
  }
  if (!open_ended) throw ValidationError("the last fixation interval must be open-ended (e.g. '6-')");
  intervals_from_edges(edges);
  return edges;
}

namespace detail {

/// Fixations that a model is asked to predict: every index >= 1.
template <class Pred>
std::vector<Point2> voluntary_points(const Scanpath& sp, Pred&& keep_index, double sx = 1.0, double sy = 1.0) {
  std::vector<Point2> pts;
  for (std::size_t i = 1; i < sp.fixations.size(); ++i) {
    if (keep_index(i)) pts.push_back({sp.fixations[i].x_px * sx, sp.fixations[i].y_px * sy});
  }
  return pts;
}

/// For every image, the raw KDE over selected fixations of all *other* images,
/// rescaled to that image's geometry. nullopt when no other image contributes.
template <class Pred>
std::map<std::string, std::optional<std::vector<double>>> leave_one_image_out_raw(const Dataset& ds, Pred keep_index,
                                                                                 double bandwidth_px, int downsample) {
  std::map<std::string, std::vector<const Scanpath*>> by_image;
  for (const auto& sp : ds.scanpaths) by_image[sp.image_id].push_back(&sp);

  std::map<std::pair<int, int>, std::vector<std::string>> targets_by_size;
  for (const auto& [id, meta] : ds.stimuli) targets_by_size[{meta.width_px, meta.height_px}].push_back(id);

  std::map<std::string, std::optional<std::vector<double>>> out;
  for (const auto& [size, targets] : targets_by_size) {
    const GridGeometry g{size.first, size.second, downsample};
    std::map<std::string, std::vector<double>> source_grids;
    std::map<std::string, bool> has_points;
    for (const auto& [source, paths] : by_image) {
      const auto& meta = ds.stimulus(source);
      const double sx = static_cast<double>(size.first) / meta.width_px;
      const double sy = static_cast<double>(size.second) / meta.height_px;
      std::vector<Point2> pts;
      for (const auto* sp : paths) {
        auto p = voluntary_points(*sp, keep_index, sx, sy);
        pts.insert(pts.end(), p.begin(), p.end());
      }
      has_points[source] = !pts.empty();
      source_grids.emplace(source, raw_kde(pts, bandwidth_px, g));
    }
    for (const auto& target : targets) {
      std::vector<double> sum(g.cells(), 0.0);
      bool any = false;
      for (const auto& [source, grid] : source_grids) {
        if (source == target || !has_points[source]) continue;
        any = true;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += grid[i];
      }
      out[target] = any ? std::optional<std::vector<double>>(std::move(sum)) : std::nullopt;
    }
  }
  return out;
}

inline PriorityMap center_bias_from_raw(const std::vector<double>& raw, const GridGeometry& g) {
  return mix_with_baselines(raw, 1.0 - kCenterBiasFloor, kCenterBiasFloor, nullptr, 0.0, g);
}

}  // namespace detail

enum class BaselineKind { uniform, centerbias, fixnum_centerbias, goldstandard };

inline const char* baseline_kind_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::uniform: return "uniform";
    case BaselineKind::centerbias: return "centerbias";
    case BaselineKind::fixnum_centerbias: return "fixnum_centerbias";
    case BaselineKind::goldstandard: return "goldstandard";
  }
  return "?";
}

inline BaselineKind parse_baseline_kind(const std::string& s) {
  for (auto k : {BaselineKind::uniform, BaselineKind::centerbias, BaselineKind::fixnum_centerbias,
                 BaselineKind::goldstandard}) {
    if (s == baseline_kind_name(k)) return k;
  }
  throw ValidationError("unknown baseline kind '" + s + "'");
}

/// Parameters of a KDE baseline plus its cached per-image grids (one grid per
/// fixation interval for the fixation-number-dependent center bias).
struct FittedBaseline {
  BaselineKind kind = BaselineKind::centerbias;
  KdeParams params;
  std::vector<std::size_t> interval_edges{1};
  int downsample = 1;
  std::map<std::string, std::vector<PriorityMap>> grids;

  const PriorityMap& grid(const std::string& image_id, std::size_t fixation_index = 1) const {
    auto it = grids.find(image_id);
    if (it == grids.end()) throw ValidationError("baseline has no grid for image '" + image_id + "'");
    const auto intervals = intervals_from_edges(interval_edges);
    for (std::size_t k = 0; k < intervals.size(); ++k) {
      if (intervals[k].contains(fixation_index)) return it->second.at(k);
    }
    return it->second.front();
  }

  nlohmann::json to_json() const {
    return {{"kind", baseline_kind_name(kind)},
            {"bandwidth_px", params.bandwidth_px},
            {"uniform_weight", params.uniform_weight},
            {"centerbias_weight", params.centerbias_weight},
            {"interval_edges", interval_edges}};
  }

  /// Parameters only; grids are rebuilt from a dataset.
  static FittedBaseline from_json(const nlohmann::json& j) {
    FittedBaseline b;
    try {
      b.kind = parse_baseline_kind(j.at("kind").get<std::string>());
      b.params.bandwidth_px = j.at("bandwidth_px").get<double>();
      b.params.uniform_weight = j.value("uniform_weight", 0.0);
      b.params.centerbias_weight = j.value("centerbias_weight", 0.0);
      b.interval_edges = j.value("interval_edges", std::vector<std::size_t>{1});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad baseline parameter file: ") + e.what());
    }
    b.params.validate();
    intervals_from_edges(b.interval_edges);
    return b;
  }
};

/// Center bias for every image: a KDE over voluntary fixations on all other
/// images, mixed with a uniform floor.
inline FittedBaseline build_center_bias(const Dataset& ds, double bandwidth_px, int downsample = 1) {
  if (ds.stimuli.size() < 2) throw ValidationError("center bias needs at least two images");
  FittedBaseline b;
  b.kind = BaselineKind::centerbias;
  b.params = {bandwidth_px, kCenterBiasFloor, 0.0};
  b.params.validate();
  b.downsample = downsample;
  const auto raw = detail::leave_one_image_out_raw(ds, [](std::size_t) { return true; }, bandwidth_px, downsample);
  for (const auto& [id, grid] : raw) {
    if (!grid) throw ValidationError("center bias for '" + id + "': no fixations on other images");
    b.grids[id].push_back(detail::center_bias_from_raw(*grid, GridGeometry::of(ds.stimulus(id), downsample)));
  }
  return b;
}

inline PriorityMap fit_center_bias(const Dataset& ds, const std::string& target_image, double bandwidth_px,
                                   int downsample = 1) {
  ds.stimulus(target_image);
  return build_center_bias(ds, bandwidth_px, downsample).grids.at(target_image).front();
}

/// One center-bias grid per fixation-index interval. Images whose other
/// images have no fixations in some interval fall back to the plain center bias.
inline FittedBaseline fit_fixnum_center_bias(const Dataset& ds, const std::vector<std::size_t>& interval_edges,
                                             double bandwidth_px, int downsample = 1) {
  const auto intervals = intervals_from_edges(interval_edges);
  for (const auto& iv : intervals) {
    bool any = false;
    for (const auto& sp : ds.scanpaths) {
      for (std::size_t i = 1; i < sp.size() && !any; ++i) any = iv.contains(i);
    }
    if (!any) throw ValidationError("fixation interval starting at " + std::to_string(iv.first) + " has no fixations");
  }
  const auto plain = build_center_bias(ds, bandwidth_px, downsample);
  FittedBaseline b;
  b.kind = BaselineKind::fixnum_centerbias;
  b.params = plain.params;
  b.interval_edges = interval_edges;
  b.downsample = downsample;
  for (const auto& iv : intervals) {
    const auto raw = detail::leave_one_image_out_raw(
        ds, [&iv](std::size_t i) { return iv.contains(i); }, bandwidth_px, downsample);
    for (const auto& [id, grid] : raw) {
      double mass = 0.0;
      if (grid) {
        for (double v : *grid) mass += v;
      }
      if (mass > 0.0) {
        b.grids[id].push_back(detail::center_bias_from_raw(*grid, GridGeometry::of(ds.stimulus(id), downsample)));
      } else {
        b.grids[id].push_back(plain.grids.at(id).front());
      }
    }
  }
  return b;
}

/// Mean per-image LL (bits/fix) of a baseline over all voluntary fixations, averaged over images.
inline double baseline_log_likelihood(const Dataset& ds, const FittedBaseline& baseline) {
  std::vector<FixationScore> scores;
  for (std::size_t s = 0; s < ds.scanpaths.size(); ++s) {
    const auto& sp = ds.scanpaths[s];
    for (std::size_t i = 1; i < sp.size(); ++i) {
      scores.push_back({sp.image_id, sp.subject_id, s, i, Metric::LL,
                        log_likelihood(baseline.grid(sp.image_id, i), sp.fixations[i])});
    }
  }
  return aggregate(scores, Metric::LL);
}

/// Fits the center-bias bandwidth (log-space, 0.1-200 px) for maximum
/// leave-one-image-out likelihood.
inline std::pair<FittedBaseline, FitResult> fit_center_bias_bandwidth(const Dataset& ds, int downsample = 1,
                                                                      double line_tolerance = 1e-4) {
  FitSpec spec;
  spec.names = {"log_bandwidth_px"};
  spec.lower = {std::log(std::max(0.1, downsample / 2.0))};
  spec.upper = {std::log(200.0)};
  spec.initial = {std::log(std::clamp(0.1 * ds.stimuli.begin()->second.width_px, std::exp(spec.lower[0]), 200.0))};
  spec.split = "leave_one_image_out";
  spec.line_tolerance = line_tolerance;
  spec.objective = [&](const std::vector<double>& x) {
    try {
      return baseline_log_likelihood(ds, build_center_bias(ds, std::exp(x[0]), downsample));
    } catch (const ValidationError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto fit = maximize(spec);
  return {build_center_bias(ds, std::exp(fit.parameters[0]), downsample), fit};
}

/// Gold-standard prediction for one image: a KDE over voluntary fixations of
/// all subjects except `excluded_subject`, mixed with uniform and center-bias components.
inline PriorityMap gold_standard_predict(const Dataset& ds, const std::string& image_id,
                                         const std::optional<std::string>& excluded_subject, const KdeParams& params,
                                         const PriorityMap& centerbias, int downsample = 1) {
  params.validate();
  const auto g = GridGeometry::of(ds.stimulus(image_id), downsample);
  if (params.centerbias_weight > 0.0 && (centerbias.width() != g.cols() || centerbias.height() != g.rows())) {
    throw ValidationError("center bias grid does not match the image grid");
  }
  std::vector<Point2> pts;
  for (const auto& sp : ds.scanpaths) {
    if (sp.image_id != image_id || (excluded_subject && sp.subject_id == *excluded_subject)) continue;
    auto p = detail::voluntary_points(sp, [](std::size_t) { return true; });
    pts.insert(pts.end(), p.begin(), p.end());
  }
  if (pts.empty()) throw ValidationError("gold standard for '" + image_id + "': no fixations from other subjects");
  return detail::mix_with_baselines(detail::raw_kde(pts, params.bandwidth_px, g), params.kde_weight(),
                                    params.uniform_weight, &centerbias, params.centerbias_weight, g);
}

struct GoldStandardFit {
  KdeParams params;
  FitResult fit;
  double loso_ll = 0.0;   // mean over held-out subjects of their mean LL
  double joint_ll = 0.0;  // same assembly, target subject included in the KDE
};

namespace detail {

/// Mixture weights (kde, uniform, centerbias) from two free logits.
inline KdeParams gold_params_from(const std::vector<double>& x) {
  const double m = std::max({0.0, x[1], x[2]});
  const double ek = std::exp(-m);
  const double eu = std::exp(x[1] - m);
  const double ec = std::exp(x[2] - m);
  const double z = ek + eu + ec;
  return {std::exp(x[0]), eu / z, ec / z};
}

/// Evaluates the gold standard objective over a dataset. Raw per-subject KDE
/// grids are cached for the most recent bandwidth.
class GoldStandardObjective {
 public:
  GoldStandardObjective(const Dataset& ds, const FittedBaseline& centerbias, int downsample)
      : ds_(ds), centerbias_(centerbias), downsample_(downsample) {
    for (std::size_t s = 0; s < ds.scanpaths.size(); ++s) {
      by_image_[ds.scanpaths[s].image_id][ds.scanpaths[s].subject_id].push_back(s);
    }
  }

  /// Per-subject mean LL with `joint` deciding whether the target subject's own fixations enter the KDE.
  std::map<std::string, std::pair<double, std::size_t>> per_subject(const KdeParams& params, bool joint) {
    refresh(params.bandwidth_px);
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& [image, subjects] : by_image_) {
      const auto g = GridGeometry::of(ds_.stimulus(image), downsample_);
      const auto& raws = raw_.at(image);
      const auto& cb = centerbias_.grid(image);
      for (const auto& [subject, indices] : subjects) {
        std::vector<double> sum(g.cells(), 0.0);
        bool any = false;
        for (const auto& [other, grid] : raws) {
          if ((!joint && other == subject) || !grid.second) continue;
          any = true;
          for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += grid.first[i];
        }
        if (!any) continue;
        const auto map = mix_with_baselines(sum, params.kde_weight(), params.uniform_weight, &cb,
                                            params.centerbias_weight, g);
        const LogProbability logp(map);
        const double log2_uniform = std::log2(1.0 / static_cast<double>(map.size()));
        auto& [total, count] = acc[subject];
        for (std::size_t s : indices) {
          const auto& sp = ds_.scanpaths[s];
          for (std::size_t i = 1; i < sp.size(); ++i) {
            total += logp.log2_at(sp.fixations[i]) - log2_uniform;
            ++count;
          }
        }
      }
    }
    return acc;
  }

  double operator()(const KdeParams& params, bool joint) {
    const auto acc = per_subject(params, joint);
    if (acc.empty()) throw ValidationError("gold standard needs at least one image with two subjects");
    double total = 0.0;
    std::size_t splits = 0;
    for (const auto& [subject, sc] : acc) {
      if (sc.second == 0) continue;
      total += sc.first / static_cast<double>(sc.second);
      ++splits;
    }
    if (splits == 0) throw ValidationError("gold standard has no scorable fixations");
    return total / static_cast<double>(splits);
  }

 private:
  void refresh(double bandwidth) {
    if (bandwidth == cached_bandwidth_) return;
    raw_.clear();
    for (const auto& [image, subjects] : by_image_) {
      const auto g = GridGeometry::of(ds_.stimulus(image), downsample_);
      for (const auto& [subject, indices] : subjects) {
        std::vector<Point2> pts;
        for (std::size_t s : indices) {
          auto p = voluntary_points(ds_.scanpaths[s], [](std::size_t) { return true; });
          pts.insert(pts.end(), p.begin(), p.end());
        }
        raw_[image][subject] = {raw_kde(pts, bandwidth, g), !pts.empty()};
      }
    }
    cached_bandwidth_ = bandwidth;
  }

  const Dataset& ds_;
  const FittedBaseline& centerbias_;
  int downsample_;
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> by_image_;
  std::map<std::string, std::map<std::string, std::pair<std::vector<double>, bool>>> raw_;
  double cached_bandwidth_ = -1.0;
};

}  // namespace detail

/// Mean over held-out subjects of their mean LL under the gold standard.
inline double gold_standard_log_likelihood(const Dataset& ds, const FittedBaseline& centerbias,
                                           const KdeParams& params, bool joint, int downsample = 1) {
  detail::GoldStandardObjective objective(ds, centerbias, downsample);
  return objective(params, joint);
}

/// Fits bandwidth (log-space, 0.1-200 px) and softmax-parameterized mixture
/// weights for maximum leave-one-subject-out likelihood.
inline GoldStandardFit fit_gold_standard(const Dataset& ds, const FittedBaseline& centerbias, int downsample = 1,
                                         double line_tolerance = 1e-4) {
  loso_splits(ds);
  std::map<std::string, std::map<std::string, int>> subjects_per_image;
  for (const auto& sp : ds.scanpaths) subjects_per_image[sp.image_id][sp.subject_id] = 1;
  if (std::none_of(subjects_per_image.begin(), subjects_per_image.end(),
                   [](const auto& kv) { return kv.second.size() >= 2; })) {
    throw ValidationError("gold standard needs at least one image viewed by two subjects");
  }
  detail::GoldStandardObjective objective(ds, centerbias, downsample);
  FitSpec spec;
  spec.names = {"log_bandwidth_px", "logit_uniform", "logit_centerbias"};
  spec.lower = {std::log(std::max(0.1, downsample / 2.0)), -12.0, -12.0};
  spec.upper = {std::log(200.0), 12.0, 12.0};
  spec.initial = {std::log(std::clamp(0.05 * ds.stimuli.begin()->second.width_px, std::exp(spec.lower[0]), 200.0)),
                  -2.0, -2.0};
  spec.split = "loso";
  spec.line_tolerance = line_tolerance;
  spec.objective = [&](const std::vector<double>& x) {
    try {
      return objective(detail::gold_params_from(x), false);
    } catch (const ValidationError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  GoldStandardFit out;
  out.fit = maximize(spec);
  out.params = detail::gold_params_from(out.fit.parameters);
  out.loso_ll = out.fit.objective;
  out.joint_ll = objective(out.params, true);
  return out;
}

}  // namespace scanbench

#endif  // SCANBENCH_DENSITY_HPP
