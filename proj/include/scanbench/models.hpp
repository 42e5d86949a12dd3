#ifndef SCANBENCH_MODELS_HPP
#define SCANBENCH_MODELS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "density.hpp"
#include "metrics.hpp"
#include "types.hpp"

namespace scanbench {

using Rng = std::mt19937_64;

/// What a model sees of the stimulus it is asked about.
struct Stimulus {
  StimulusMeta meta;
  GridGeometry geometry;
  // Saliency on `geometry`'s grid, if the caller has one.
  std::shared_ptr<const PriorityMap> saliency;
  // Subject whose scanpath is being predicted (used by leave-one-subject-out baselines).
  std::string subject_id;

  static Stimulus of(const StimulusMeta& meta, int downsample = 1) {
    return Stimulus{meta, GridGeometry::of(meta, downsample), nullptr, {}};
  }
};

class ModelState {
 public:
  virtual ~ModelState() = default;
};

/// A model that builds an internal state from a scanpath history and emits a
/// priority map for the next fixation.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;

  virtual std::string name() const = 0;
  /// Probabilistic models emit probability maps and get LL/IG scores.
  virtual bool probabilistic() const { return true; }
  /// Number of most recent fixations the map depends on; nullopt for the whole history.
  virtual std::optional<std::size_t> dependency_order() const = 0;
  virtual bool needs_saliency() const { return false; }

  virtual std::unique_ptr<ModelState> initialize(const Stimulus& stimulus, const Fixation& first) const = 0;
  virtual void update_state(ModelState& state, const Fixation& next) const = 0;
  virtual PriorityMap compute_priority_map(const ModelState& state) const = 0;

  /// Probabilistic models sample a cell (then a uniform position inside it);
  /// others take the row-major first argmax cell center.
  virtual Fixation sample_fixation(const PriorityMap& map, Rng& rng) const;
};

/// Draws cells from a probability map.
class CellSampler {
 public:
  explicit CellSampler(const PriorityMap& map) : dist_(map.values().begin(), map.values().end()) {}
  std::size_t operator()(Rng& rng) { return dist_(rng); }

 private:
  std::discrete_distribution<std::size_t> dist_;
};

inline Fixation fixation_in_cell(const PriorityMap& map, std::size_t cell, Rng* rng) {
  const int ds = map.downsample();
  const double col = static_cast<double>(cell % static_cast<std::size_t>(map.width()));
  const double row = static_cast<double>(cell / static_cast<std::size_t>(map.width()));
  double ox = 0.5;
  double oy = 0.5;
  if (rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ox = u(*rng);
    oy = u(*rng);
  }
  return Fixation{(col + ox) * ds, (row + oy) * ds, std::nullopt, false};
}

inline std::size_t argmax_cell(const PriorityMap& map) {
  const auto& v = map.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline Fixation ConditionalModel::sample_fixation(const PriorityMap& map, Rng& rng) const {
  if (probabilistic()) {
    CellSampler sampler(map);
    return fixation_in_cell(map, sampler(rng), &rng);
  }
  return fixation_in_cell(map, argmax_cell(map), nullptr);
}

/// Replays the history through initialize/update_state and returns the map
/// for the fixation that follows it.
inline PriorityMap conditional_prediction(const ConditionalModel& model, const Stimulus& stimulus,
                                          const std::vector<Fixation>& history) {
  if (history.empty()) throw ValidationError("conditional prediction needs at least the initial fixation");
  for (const auto& f : history) {
    if (!stimulus.meta.contains(f.x_px, f.y_px)) throw ValidationError("history fixation outside the stimulus");
  }
  auto state = model.initialize(stimulus, history.front());
  for (std::size_t i = 1; i < history.size(); ++i) model.update_state(*state, history[i]);
  return model.compute_priority_map(*state);
}

/// Generates a scanpath starting with a forced fixation at the screen center.
inline Scanpath sample_scanpath(const ConditionalModel& model, const Stimulus& stimulus, std::size_t n_fixations,
                                Rng& rng) {
  if (n_fixations < 1) throw ValidationError("a scanpath has at least one fixation");
  Scanpath sp;
  sp.image_id = stimulus.meta.image_id;
  sp.subject_id = stimulus.subject_id;
  sp.forced_initial = true;
  sp.fixations.push_back({stimulus.meta.center_x(), stimulus.meta.center_y(), std::nullopt, false});
  auto state = model.initialize(stimulus, sp.fixations.front());
  while (sp.fixations.size() < n_fixations) {
    const auto map = model.compute_priority_map(*state);
    auto next = model.sample_fixation(map, rng);
    next.x_px = std::min(next.x_px, std::nextafter(static_cast<double>(stimulus.meta.width_px), 0.0));
    next.y_px = std::min(next.y_px, std::nextafter(static_cast<double>(stimulus.meta.height_px), 0.0));
    sp.fixations.push_back(next);
    model.update_state(*state, next);
  }
  return sp;
}

// ---------------------------------------------------------------------------
// Spatial (order 0) models

namespace detail {

struct StaticMapState : ModelState {
  PriorityMap map;
  std::string image_id;
  std::size_t next_index = 1;
  explicit StaticMapState(PriorityMap m, std::string id = {}) : map(std::move(m)), image_id(std::move(id)) {}
};

}  // namespace detail

class UniformModel : public ConditionalModel {
 public:
  std::string name() const override { return "uniform"; }
  std::optional<std::size_t> dependency_order() const override { return 0; }
  std::unique_ptr<ModelState> initialize(const Stimulus& s, const Fixation&) const override {
    return std::make_unique<detail::StaticMapState>(PriorityMap::uniform(s.geometry));
  }
  void update_state(ModelState&, const Fixation&) const override {}
  PriorityMap compute_priority_map(const ModelState& st) const override {
    return static_cast<const detail::StaticMapState&>(st).map;
  }
};

/// Priority map taken straight from the stimulus saliency; not probabilistic.
class SaliencyModel : public ConditionalModel {
 public:
  explicit SaliencyModel(std::string label = "saliency") : label_(std::move(label)) {}
  std::string name() const override { return label_; }
  bool probabilistic() const override { return false; }
  bool needs_saliency() const override { return true; }
  std::optional<std::size_t> dependency_order() const override { return 0; }
  std::unique_ptr<ModelState> initialize(const Stimulus& s, const Fixation&) const override {
    if (!s.saliency) throw ValidationError("saliency model needs a saliency map");
    return std::make_unique<detail::StaticMapState>(
        PriorityMap(s.geometry, s.saliency->values(), MapKind::priority));
  }
  void update_state(ModelState&, const Fixation&) const override {}
  PriorityMap compute_priority_map(const ModelState& st) const override {
    return static_cast<const detail::StaticMapState&>(st).map;
  }

 private:
  std::string label_;
};

/// Center bias or fixation-number-dependent center bias from precomputed grids.
class CenterBiasModel : public ConditionalModel {
 public:
  explicit CenterBiasModel(std::shared_ptr<const FittedBaseline> baseline) : baseline_(std::move(baseline)) {}
  std::string name() const override {
    return baseline_->kind == BaselineKind::fixnum_centerbias ? "fixnum_centerbias" : "centerbias";
  }
  std::optional<std::size_t> dependency_order() const override {
    // the fixation-number variant depends on the history length
    if (baseline_->kind == BaselineKind::fixnum_centerbias) return std::nullopt;
    return 0;
  }
  std::unique_ptr<ModelState> initialize(const Stimulus& s, const Fixation&) const override {
    check_grid(s);
    return std::make_unique<detail::StaticMapState>(baseline_->grid(s.meta.image_id, 1), s.meta.image_id);
  }
  void update_state(ModelState& st, const Fixation&) const override {
    auto& state = static_cast<detail::StaticMapState&>(st);
    ++state.next_index;
    if (baseline_->kind == BaselineKind::fixnum_centerbias) state.map = baseline_->grid(state.image_id, state.next_index);
  }
  PriorityMap compute_priority_map(const ModelState& st) const override {
    return static_cast<const detail::StaticMapState&>(st).map;
  }

 private:
  void check_grid(const Stimulus& s) const {
    const auto& g = baseline_->grid(s.meta.image_id, 1);
    if (g.width() != s.geometry.cols() || g.height() != s.geometry.rows()) {
      throw ValidationError("center bias grid does not match the requested resolution");
    }
  }
  std::shared_ptr<const FittedBaseline> baseline_;
};

/// Spatial gold standard; leave-one-subject-out unless `joint`.
class GoldStandardModel : public ConditionalModel {
 public:
  GoldStandardModel(std::shared_ptr<const Dataset> ds, KdeParams params, std::shared_ptr<const FittedBaseline> cb,
                    bool joint)
      : ds_(std::move(ds)), params_(params), cb_(std::move(cb)), joint_(joint) {
    params_.validate();
  }
  std::string name() const override { return joint_ ? "goldstandard_joint" : "goldstandard_loso"; }
  std::optional<std::size_t> dependency_order() const override { return 0; }
  std::unique_ptr<ModelState> initialize(const Stimulus& s, const Fixation&) const override {
    std::optional<std::string> excluded;
    if (!joint_) excluded = s.subject_id;
    return std::make_unique<detail::StaticMapState>(gold_standard_predict(
        *ds_, s.meta.image_id, excluded, params_, cb_->grid(s.meta.image_id), s.geometry.downsample));
  }
  void update_state(ModelState&, const Fixation&) const override {}
  PriorityMap compute_priority_map(const ModelState& st) const override {
    return static_cast<const detail::StaticMapState&>(st).map;
  }

 private:
  std::shared_ptr<const Dataset> ds_;
  KdeParams params_;
  std::shared_ptr<const FittedBaseline> cb_;
  bool joint_;
};

// ---------------------------------------------------------------------------
// Jump models (saliency-modulated Levy flight / Gaussian jumps)

enum class JumpKernel { cauchy, gaussian };

struct JumpModelParams {
  JumpKernel kernel = JumpKernel::cauchy;
  double scale_px = 50.0;
  // Inverse temperature applied to the saliency map.
  double saliency_exponent = 0.0;

  void validate() const {
    if (!(scale_px > 0.0) || !std::isfinite(scale_px)) throw ValidationError("jump scale must be positive");
    if (!(saliency_exponent >= 0.0) || !std::isfinite(saliency_exponent)) {
      throw ValidationError("saliency exponent must be nonnegative");
    }
  }
};

/// Radial jump kernel at normalized distance r = d / scale, up to a constant:
/// bivariate Cauchy (1 + r^2)^(-3/2) or Gaussian exp(-r^2 / 2).
inline double jump_kernel(JumpKernel k, double r) {
  return k == JumpKernel::cauchy ? std::pow(1.0 + r * r, -1.5) : std::exp(-0.5 * r * r);
}

inline double log_jump_kernel(JumpKernel k, double r) {
  return k == JumpKernel::cauchy ? -1.5 * std::log1p(r * r) : -0.5 * r * r;
}

/// Log saliency floored at 1e-9 of the maximum; empty when the exponent is 0.
inline std::vector<double> floored_log_saliency(const PriorityMap* saliency, double exponent) {
  if (!saliency || exponent == 0.0) return {};
  const auto& v = saliency->values();
  const double hi = *std::max_element(v.begin(), v.end());
  if (!(hi > 0.0)) throw ValidationError("saliency map has no positive values");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(std::max(v[i], 1e-9 * hi));
  return out;
}

/// p(cell) proportional to saliency(cell)^exponent * kernel(|cell - current| / scale).
inline PriorityMap jump_model_map(const JumpModelParams& params, const Fixation& current, const GridGeometry& g,
                                  const PriorityMap* saliency = nullptr,
                                  const std::vector<double>* log_saliency = nullptr) {
  params.validate();
  if (!g.cell_of(current.x_px, current.y_px)) throw ValidationError("current fixation outside the image");
  std::vector<double> own;
  if (!log_saliency) {
    own = floored_log_saliency(saliency, params.saliency_exponent);
    log_saliency = &own;
  }
  if (!log_saliency->empty() && log_saliency->size() != g.cells()) {
    throw ValidationError("saliency map does not match the grid");
  }
  std::vector<double> logw(g.cells());
  double hi = -std::numeric_limits<double>::infinity();
  const double inv_scale = 1.0 / params.scale_px;
  for (int r = 0; r < g.rows(); ++r) {
    const double dy = g.cell_center_y(r) - current.y_px;
    for (int c = 0; c < g.cols(); ++c) {
      const double dx = g.cell_center_x(c) - current.x_px;
      const std::size_t i = static_cast<std::size_t>(r) * g.cols() + c;
      double lw = log_jump_kernel(params.kernel, std::sqrt(dx * dx + dy * dy) * inv_scale);
      if (!log_saliency->empty()) lw += params.saliency_exponent * (*log_saliency)[i];
      logw[i] = lw;
      hi = std::max(hi, lw);
    }
  }
  for (double& w : logw) w = std::exp(w - hi);
  return PriorityMap::from_weights(g, std::move(logw));
}

class JumpModel : public ConditionalModel {
 public:
  explicit JumpModel(JumpModelParams params) : params_(params) { params_.validate(); }
  std::string name() const override { return params_.kernel == JumpKernel::cauchy ? "jump_cauchy" : "jump_gaussian"; }
  std::optional<std::size_t> dependency_order() const override { return 1; }
  bool needs_saliency() const override { return params_.saliency_exponent > 0.0; }
  const JumpModelParams& params() const { return params_; }

  struct State : ModelState {
    GridGeometry geometry;
    std::shared_ptr<const std::vector<double>> log_saliency;
    Fixation current;
  };

  std::unique_ptr<ModelState> initialize(const Stimulus& s, const Fixation& first) const override {
    auto st = std::make_unique<State>();
    st->geometry = s.geometry;
    if (params_.saliency_exponent > 0.0) {
      if (!s.saliency) throw ValidationError("jump model with a saliency exponent needs a saliency map");
      st->log_saliency = std::make_shared<std::vector<double>>(
          floored_log_saliency(s.saliency.get(), params_.saliency_exponent));
    }
    st->current = first;
    return st;
  }
  void update_state(ModelState& st, const Fixation& next) const override { static_cast<State&>(st).current = next; }
  PriorityMap compute_priority_map(const ModelState& st) const override {
    const auto& s = static_cast<const State&>(st);
    static const std::vector<double> none;
    return jump_model_map(params_, s.current, s.geometry, nullptr, s.log_saliency ? s.log_saliency.get() : &none);
  }

 private:
  JumpModelParams params_;
};

// ---------------------------------------------------------------------------
// SaccadicFlow: image-independent Gaussian jumps whose mean offset and
// log-variances are quadratic polynomials of the previous position.

/// Quadratic basis {1, u, v, u^2, uv, v^2} over normalized coordinates.
inline std::array<double, 6> flow_basis(double u, double v) { return {1.0, u, v, u * u, u * v, v * v}; }

struct SaccadicFlowParams {
  std::array<double, 6> mean_x{};
  std::array<double, 6> mean_y{};
  std::array<double, 6> log_var_x{std::log(0.01), 0, 0, 0, 0, 0};
  std::array<double, 6> log_var_y{std::log(0.01), 0, 0, 0, 0, 0};
  double correlation = 0.0;

  struct Jump {
    double mean_u, mean_v;  // absolute target mean in normalized coordinates
    double var_u, var_v, rho;
  };

  static double dot(const std::array<double, 6>& a, const std::array<double, 6>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < 6; ++i) s += a[i] * b[i];
    return s;
  }

  Jump jump_from(double u, double v) const {
    const auto phi = flow_basis(u, v);
    Jump j{u + dot(mean_x, phi), v + dot(mean_y, phi), std::exp(dot(log_var_x, phi)), std::exp(dot(log_var_y, phi)),
           correlation};
    if (!(j.var_u > 0.0) || !(j.var_v > 0.0) || !std::isfinite(j.var_u) || !std::isfinite(j.var_v) ||
        !(std::abs(j.rho) < 1.0) || !std::isfinite(j.mean_u) || !std::isfinite(j.mean_v)) {
      throw ValidationError("saccadic flow covariance is not positive definite");
    }
    return j;
  }

  nlohmann::json to_json() const {
    return {{"mean_x", mean_x}, {"mean_y", mean_y}, {"log_var_x", log_var_x}, {"log_var_y", log_var_y},
            {"correlation", correlation}};
  }
  static SaccadicFlowParams from_json(const nlohmann::json& j) {
    SaccadicFlowParams p;
    p.mean_x = j.at("mean_x").get<std::array<double, 6>>();
    p.mean_y = j.at("mean_y").get<std::array<double, 6>>();
    p.log_var_x = j.at("log_var_x").get<std::array<double, 6>>();
    p.log_var_y = j.at("log_var_y").get<std::array<double, 6>>();
    p.correlation = j.value("correlation", 0.0);
    return p;
  }
};

inline PriorityMap saccadic_flow_map(const SaccadicFlowParams& params, const Fixation& current,
                                     const GridGeometry& g) {
  if (!g.cell_of(current.x_px, current.y_px)) throw ValidationError("current fixation outside the image");
  const double w = g.width_px;
  const double h = g.height_px;
  const auto jump = params.jump_from(current.x_px / w, current.y_px / h);
  const double su = std::sqrt(jump.var_u);
  const double sv = std::sqrt(jump.var_v);
  const double k = -0.5 / (1.0 - jump.rho * jump.rho);
  std::vector<double> logw(g.cells());
  double hi = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < g.rows(); ++r) {
    const double zv = (g.cell_center_y(r) / h - jump.mean_v) / sv;
    for (int c = 0; c < g.cols(); ++c) {
      const double zu = (g.cell_center_x(c) / w - jump.mean_u) / su;
      const double lw = k * (zu * zu - 2.0 * jump.rho * zu * zv + zv * zv);
      logw[static_cast<std::size_t>(r) * g.cols() + c] = lw;
      hi = std::max(hi, lw);
    }
  }
  for (double& v : logw) v = std::exp(v - hi);
  return PriorityMap::from_weights(g, std::move(logw));
}

class SaccadicFlowModel : public ConditionalModel {
 public:
  explicit SaccadicFlowModel(SaccadicFlowParams params) : params_(params) {}
  std::string name() const override { return "saccadic_flow"; }
  std::optional<std::size_t> dependency_order() const override { return 1; }
  const SaccadicFlowParams& params() const { return params_; }

  struct State : ModelState {
    GridGeometry geometry;
    Fixation current;
  };
  std::unique_ptr<ModelState> initialize(const Stimulus& s, const Fixation& first) const override {
    auto st = std::make_unique<State>();
    st->geometry = s.geometry;
    st->current = first;
    return st;
  }
  void update_state(ModelState& st, const Fixation& next) const override { static_cast<State&>(st).current = next; }
  PriorityMap compute_priority_map(const ModelState& st) const override {
    const auto& s = static_cast<const State&>(st);
    return saccadic_flow_map(params_, s.current, s.geometry);
  }

 private:
  SaccadicFlowParams params_;
};

// ---------------------------------------------------------------------------
// SceneWalk-style attention and inhibition-of-return dynamics over a saliency map

struct SceneWalkParams {
  double sigma_attention_dva = 6.0;
  double sigma_inhibition_dva = 2.0;
  double tau_attention_ms = 300.0;
  double tau_inhibition_ms = 1600.0;
  double inhibition_strength = 0.3;
  double gamma = 1.0;
  double uniform_floor = 0.01;
  double default_duration_ms = 250.0;

  void validate() const {
    const double all[] = {sigma_attention_dva, sigma_inhibition_dva, tau_attention_ms, tau_inhibition_ms, gamma,
                          default_duration_ms};
    for (double v : all) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("scenewalk parameters must be positive");
    }
    if (!(tau_attention_ms < tau_inhibition_ms)) throw ValidationError("scenewalk needs tau_attention < tau_inhibition");
    if (!(sigma_inhibition_dva < sigma_attention_dva)) {
      throw ValidationError("scenewalk needs sigma_inhibition < sigma_attention");
    }
    if (!(inhibition_strength >= 0.0)) throw ValidationError("inhibition strength must be nonnegative");
    if (!(uniform_floor >= 0.0 && uniform_floor <= 1.0)) throw ValidationError("uniform floor must lie in [0, 1]");
  }

  nlohmann::json to_json() const {
    return {{"sigma_attention_dva", sigma_attention_dva}, {"sigma_inhibition_dva", sigma_inhibition_dva},
            {"tau_attention_ms", tau_attention_ms},       {"tau_inhibition_ms", tau_inhibition_ms},
            {"inhibition_strength", inhibition_strength}, {"gamma", gamma},
            {"uniform_floor", uniform_floor},             {"default_duration_ms", default_duration_ms}};
  }
  static SceneWalkParams from_json(const nlohmann::json& j) {
    SceneWalkParams p;
    p.sigma_attention_dva = j.value("sigma_attention_dva", p.sigma_attention_dva);
    p.sigma_inhibition_dva = j.value("sigma_inhibition_dva", p.sigma_inhibition_dva);
    p.tau_attention_ms = j.value("tau_attention_ms", p.tau_attention_ms);
    p.tau_inhibition_ms = j.value("tau_inhibition_ms", p.tau_inhibition_ms);
    p.inhibition_strength = j.value("inhibition_strength", p.inhibition_strength);
    p.gamma = j.value("gamma", p.gamma);
    p.uniform_floor = j.value("uniform_floor", p.uniform_floor);
    p.default_duration_ms = j.value("default_duration_ms", p.default_duration_ms);
    p.validate();
    return p;
  }
};

class SceneWalkModel : public ConditionalModel {
 public:
  explicit SceneWalkModel(SceneWalkParams params) : params_(params) { params_.validate(); }
  std::string name() const override { return "scenewalk"; }
  std::optional<std::size_t> dependency_order() const override { return std::nullopt; }
  bool needs_saliency() const override { return true; }
  const SceneWalkParams& params() const { return params_; }

  struct State : ModelState {
    GridGeometry geometry;
    double px_per_dva = 1.0;
    std::shared_ptr<const std::vector<double>> saliency;  // normalized, floored
    std::vector<double> attention;
    std::vector<double> inhibition;
  };

  std::unique_ptr<ModelState> initialize(const Stimulus& s, const Fixation& first) const override {
    if (!s.saliency) throw ValidationError("scenewalk needs a saliency map");
    if (s.saliency->size() != s.geometry.cells()) throw ValidationError("saliency map does not match the grid");
    auto st = std::make_unique<State>();
    st->geometry = s.geometry;
    st->px_per_dva = s.meta.px_per_dva;
    const auto& v = s.saliency->values();
    const double hi = *std::max_element(v.begin(), v.end());
    if (!(hi > 0.0)) throw ValidationError("saliency map has no positive values");
    std::vector<double> sal(v.size());
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) total += sal[i] = std::max(v[i], 1e-9 * hi);
    for (double& x : sal) x /= total;
    st->attention = sal;
    st->inhibition.assign(v.size(), 1.0 / static_cast<double>(v.size()));
    st->saliency = std::make_shared<const std::vector<double>>(std::move(sal));
    update_state(*st, first);
    return st;
  }

  /// Relaxes both fields toward Gaussians at the fixation for its duration.
  void update_state(ModelState& base, const Fixation& fix) const override {
    auto& st = static_cast<State&>(base);
    const double duration = fix.duration_ms.value_or(params_.default_duration_ms);
    const auto target_a = gaussian(st, fix, params_.sigma_attention_dva, st.saliency.get());
    const auto target_f = gaussian(st, fix, params_.sigma_inhibition_dva, nullptr);
    const double keep_a = std::exp(-duration / params_.tau_attention_ms);
    const double keep_f = std::exp(-duration / params_.tau_inhibition_ms);
    for (std::size_t i = 0; i < st.attention.size(); ++i) {
      st.attention[i] = target_a[i] + (st.attention[i] - target_a[i]) * keep_a;
      st.inhibition[i] = target_f[i] + (st.inhibition[i] - target_f[i]) * keep_f;
    }
  }

  PriorityMap compute_priority_map(const ModelState& base) const override {
    const auto& st = static_cast<const State&>(base);
    const auto a = powered(st.attention);
    const auto f = powered(st.inhibition);
    std::vector<double> u(a.size());
    double total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) total += u[i] = std::max(a[i] - params_.inhibition_strength * f[i], 0.0);
    const double n = static_cast<double>(u.size());
    for (double& x : u) {
      x = total > 0.0 ? (1.0 - params_.uniform_floor) * x / total + params_.uniform_floor / n : 1.0 / n;
    }
    return PriorityMap::from_weights(st.geometry, std::move(u));
  }

 private:
  std::vector<double> powered(const std::vector<double>& field) const {
    std::vector<double> out(field.size());
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      total += out[i] = params_.gamma == 1.0 ? field[i] : std::pow(std::max(field[i], 0.0), params_.gamma);
    }
    for (double& x : out) x /= total;
    return out;
  }

  /// Normalized Gaussian at the fixation, optionally multiplied by the saliency.
  static std::vector<double> gaussian(const State& st, const Fixation& fix, double sigma_dva,
                                      const std::vector<double>* weight) {
    std::vector<double> g(st.geometry.cells(), 0.0);
    detail::add_gaussian(g, st.geometry, fix.x_px, fix.y_px, sigma_dva * st.px_per_dva);
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (weight) g[i] *= (*weight)[i];
      total += g[i];
    }
    if (!(total > 0.0)) {
      std::fill(g.begin(), g.end(), 0.0);
      g[*st.geometry.cell_of(std::min(fix.x_px, st.geometry.width_px - 1.0),
                             std::min(fix.y_px, st.geometry.height_px - 1.0))] = 1.0;
      return g;
    }
    for (double& x : g) x /= total;
    return g;
  }

  SceneWalkParams params_;
};

// ---------------------------------------------------------------------------
// Point predictions encoded as Gaussian priority maps

inline PriorityMap point_to_map(const Point2& location, double sigma_dva, const StimulusMeta& meta,
                                int downsample = 1) {
  if (!(sigma_dva > 0.0)) throw ValidationError("sigma must be positive");
  return gaussian_kde_grid({location}, sigma_dva * meta.px_per_dva, GridGeometry::of(meta, downsample));
}

/// Default width used when encoding point predictions.
inline constexpr double kDefaultPointSigmaDva = 9.0;

struct SigmaSearch {
  double sigma_dva = 0.0;
  double mean_nss = 0.0;
  std::vector<double> grid;
  std::vector<double> curve;  // mean NSS per grid point
};

/// 25-point logarithmic grid from 0.5 to 20 dva.
inline std::vector<double> sigma_grid_dva() {
  std::vector<double> g(25);
  for (int k = 0; k < 25; ++k) g[static_cast<std::size_t>(k)] = 0.5 * std::pow(40.0, k / 24.0);
  g.front() = 0.5;
  g.back() = 20.0;
  return g;
}

/// Picks the Gaussian width maximizing mean NSS of the true fixations; ties keep the smaller width.
inline SigmaSearch fit_sigma_nss(const std::vector<Point2>& predictions, const std::vector<Fixation>& truths,
                                 const StimulusMeta& meta, int downsample = 1) {
  if (predictions.empty() || predictions.size() != truths.size()) {
    throw ValidationError("sigma search needs matching, nonempty prediction and truth lists");
  }
  SigmaSearch out;
  out.grid = sigma_grid_dva();
  out.mean_nss = -std::numeric_limits<double>::infinity();
  for (double sigma : out.grid) {
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      total += nss(point_to_map(predictions[i], sigma, meta, downsample), truths[i]);
    }
    const double mean = total / static_cast<double>(predictions.size());
    out.curve.push_back(mean);
    if (mean > out.mean_nss) {
      out.mean_nss = mean;
      out.sigma_dva = sigma;
    }
  }
  return out;
}

}  // namespace scanbench

#endif  // SCANBENCH_MODELS_HPP
