#ifndef SCANBENCH_SYNTH_HPP
#define SCANBENCH_SYNTH_HPP

#include <cstdio>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "density.hpp"
#include "models.hpp"

namespace scanbench {

/// Order-0 model with a fixed Gaussian-mixture density per image, used to
/// generate spatially structured synthetic data.
class SpatialMixtureModel : public ConditionalModel {
 public:
  SpatialMixtureModel(std::map<std::string, std::vector<Point2>> centers, double sigma_px, double uniform_weight)
      : centers_(std::move(centers)), sigma_px_(sigma_px), uniform_weight_(uniform_weight) {}
  std::string name() const override { return "spatial_mixture"; }
  std::optional<std::size_t> dependency_order() const override { return 0; }
  std::unique_ptr<ModelState> initialize(const Stimulus& s, const Fixation&) const override {
    auto it = centers_.find(s.meta.image_id);
    if (it == centers_.end()) throw ValidationError("no mixture components for '" + s.meta.image_id + "'");
    return std::make_unique<detail::StaticMapState>(detail::mix_with_baselines(
        detail::raw_kde(it->second, sigma_px_, s.geometry), 1.0 - uniform_weight_, uniform_weight_, nullptr, 0.0,
        s.geometry));
  }
  void update_state(ModelState&, const Fixation&) const override {}
  PriorityMap compute_priority_map(const ModelState& st) const override {
    return static_cast<const detail::StaticMapState&>(st).map;
  }

 private:
  std::map<std::string, std::vector<Point2>> centers_;
  double sigma_px_;
  double uniform_weight_;
};

struct SynthConfig {
  std::size_t n_images = 20;
  std::size_t n_subjects = 5;
  std::size_t fixations_per_scanpath = 8;
  int width_px = 128;
  int height_px = 96;
  double px_per_dva = 35.0;
  std::optional<double> duration_ms;
  int downsample = 1;
  nlohmann::json model = {{"type", "kde_mixture"}};

  static SynthConfig from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
      c.n_images = j.value("n_images", c.n_images);
      c.n_subjects = j.value("n_subjects", c.n_subjects);
      c.fixations_per_scanpath = j.value("fixations_per_scanpath", c.fixations_per_scanpath);
      c.width_px = j.value("width_px", c.width_px);
      c.height_px = j.value("height_px", c.height_px);
      c.px_per_dva = j.value("px_per_dva", c.px_per_dva);
      c.downsample = j.value("downsample", c.downsample);
      if (j.contains("duration_ms") && !j["duration_ms"].is_null()) c.duration_ms = j["duration_ms"].get<double>();
      if (j.contains("model")) c.model = j["model"];
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad synthetic config: ") + e.what());
    }
    c.validate();
    return c;
  }

  void validate() const {
    if (n_images < 1 || n_subjects < 1 || fixations_per_scanpath < 1) {
      throw ValidationError("synthetic config needs at least one image, subject and fixation");
    }
    StimulusMeta{"probe", width_px, height_px, px_per_dva}.validate();
    if (!model.is_object() || !model.contains("type")) throw ValidationError("synthetic config needs model.type");
  }
};

struct SynthResult {
  Dataset dataset;
  nlohmann::json truth;
};

inline std::string numbered_id(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

/// Samples a dataset from a configured generating model. Every scanpath
/// starts with the forced central fixation; coordinates are quantized to the
/// precision of the scanpath file format.
inline SynthResult generate_synthetic_dataset(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  SynthResult out;
  out.dataset.name = "synthetic";
  for (std::size_t i = 0; i < config.n_images; ++i) {
    const auto id = numbered_id("img", i, 4);
    out.dataset.stimuli.emplace(id, StimulusMeta{id, config.width_px, config.height_px, config.px_per_dva});
  }

  const auto& m = config.model;
  const auto type = m.at("type").get<std::string>();
  std::unique_ptr<ConditionalModel> model;
  out.truth = m;
  out.truth["seed"] = seed;
  try {
    if (type == "kde_mixture") {
      const int components = m.value("components", 2);
      const double sigma = m.value("sigma_px", 8.0);
      const double spread = m.value("center_spread", 0.2);
      const double uniform_weight = m.value("uniform_weight", 0.0);
      if (components < 1 || !(sigma > 0.0) || uniform_weight < 0.0 || uniform_weight > 1.0) {
        throw ValidationError("invalid kde_mixture settings");
      }
      std::normal_distribution<double> unit(0.0, 1.0);
      std::map<std::string, std::vector<Point2>> centers;
      nlohmann::json jc = nlohmann::json::object();
      for (const auto& [id, meta] : out.dataset.stimuli) {
        for (int c = 0; c < components; ++c) {
          const double x = std::clamp(meta.center_x() + spread * meta.width_px * unit(rng), 0.1 * meta.width_px,
                                      0.9 * meta.width_px);
          const double y = std::clamp(meta.center_y() + spread * meta.height_px * unit(rng), 0.1 * meta.height_px,
                                      0.9 * meta.height_px);
          centers[id].push_back({x, y});
          jc[id].push_back({x, y});
        }
      }
      out.truth["centers"] = jc;
      model = std::make_unique<SpatialMixtureModel>(std::move(centers), sigma, uniform_weight);
    } else if (type == "jump") {
      JumpModelParams p;
      p.kernel = m.value("kernel", std::string("cauchy")) == "gaussian" ? JumpKernel::gaussian : JumpKernel::cauchy;
      p.scale_px = m.value("scale_px", 10.0);
      model = std::make_unique<JumpModel>(p);
    } else if (type == "saccadic_flow") {
      model = std::make_unique<SaccadicFlowModel>(
          m.contains("params") ? SaccadicFlowParams::from_json(m["params"]) : SaccadicFlowParams{});
    } else if (type == "uniform") {
      model = std::make_unique<UniformModel>();
    } else {
      throw ValidationError("unknown synthetic model type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad synthetic model settings: ") + e.what());
  }

  for (const auto& [id, meta] : out.dataset.stimuli) {
    for (std::size_t s = 0; s < config.n_subjects; ++s) {
      auto stimulus = Stimulus::of(meta, config.downsample);
      stimulus.subject_id = numbered_id("s", s, 3);
      auto sp = sample_scanpath(*model, stimulus, config.fixations_per_scanpath, rng);
      for (auto& f : sp.fixations) {
        f.x_px = quantize_coordinate(f.x_px);
        f.y_px = quantize_coordinate(f.y_px);
        if (f.x_px >= meta.width_px) f.x_px = quantize_coordinate(meta.width_px - 1e-6);
        if (f.y_px >= meta.height_px) f.y_px = quantize_coordinate(meta.height_px - 1e-6);
        f.duration_ms = config.duration_ms;
      }
      out.dataset.scanpaths.push_back(std::move(sp));
    }
  }
  return out;
}

}  // namespace scanbench

#endif  // SCANBENCH_SYNTH_HPP
