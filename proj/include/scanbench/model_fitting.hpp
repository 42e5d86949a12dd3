#ifndef SCANBENCH_MODEL_FITTING_HPP
#define SCANBENCH_MODEL_FITTING_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fitting.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "saliency_store.hpp"

namespace scanbench {

/// Mean LL (bits) over every scored fixation of the dataset, replaying each scanpath once.
inline double mean_log_likelihood(const ConditionalModel& model, const Dataset& ds, const SaliencyStore* saliency,
                                  int downsample = 1) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& sp : ds.scanpaths) {
    if (sp.size() < 2) continue;
    const auto stimulus = make_stimulus(ds, sp, downsample, saliency, model.needs_saliency());
    auto state = model.initialize(stimulus, sp.fixations.front());
    for (std::size_t i = 1; i < sp.size(); ++i) {
      total += log_likelihood(model.compute_priority_map(*state), sp.fixations[i]);
      ++count;
      model.update_state(*state, sp.fixations[i]);
    }
  }
  if (count == 0) throw ValidationError("dataset has no scored fixations");
  return total / static_cast<double>(count);
}

namespace detail {

inline double guarded(const std::function<double()>& f) {
  try {
    return f();
  } catch (const ValidationError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

struct JumpModelFit {
  JumpModelParams params;
  FitResult fit;
};

/// Maximum-likelihood jump scale (log-space) and, when saliency is supplied,
/// the saliency exponent.
inline JumpModelFit fit_jump_model(const Dataset& ds, JumpKernel kernel, const SaliencyStore* saliency,
                                   int downsample = 1, double line_tolerance = 1e-5) {
  const bool with_saliency = saliency && !saliency->empty();
  const auto& first = ds.stimuli.begin()->second;
  FitSpec spec;
  spec.names = {"log_scale_px"};
  spec.lower = {std::log(0.5)};
  spec.upper = {std::log(4.0 * std::max(first.width_px, first.height_px))};
  spec.initial = {std::log(0.1 * std::max(first.width_px, first.height_px))};
  if (with_saliency) {
    spec.names.push_back("saliency_exponent");
    spec.lower.push_back(0.0);
    spec.upper.push_back(5.0);
    spec.initial.push_back(1.0);
  }
  spec.line_tolerance = line_tolerance;
  auto to_params = [&](const std::vector<double>& x) {
    return JumpModelParams{kernel, std::exp(x[0]), with_saliency ? x[1] : 0.0};
  };
  spec.objective = [&](const std::vector<double>& x) {
    return detail::guarded([&] { return mean_log_likelihood(JumpModel(to_params(x)), ds, saliency, downsample); });
  };
  JumpModelFit out;
  out.fit = maximize(spec);
  out.params = to_params(out.fit.parameters);
  return out;
}

/// One saccade in normalized image coordinates.
struct NormalizedSaccade {
  double from_u, from_v, to_u, to_v;
};

inline std::vector<NormalizedSaccade> normalized_saccades(const Dataset& ds) {
  std::vector<NormalizedSaccade> out;
  for (const auto& sp : ds.scanpaths) {
    const auto& meta = ds.stimulus(sp.image_id);
    for (std::size_t i = 1; i < sp.size(); ++i) {
      const auto& a = sp.fixations[i - 1];
      const auto& b = sp.fixations[i];
      out.push_back({a.x_px / meta.width_px, a.y_px / meta.height_px, b.x_px / meta.width_px, b.y_px / meta.height_px});
    }
  }
  return out;
}

/// Fits SaccadicFlow by feasible generalized least squares: polynomial mean
/// offsets, log-variance polynomials regressed on log squared residuals
/// (corrected by E[log chi2_1]), and a constant correlation. Truncation at the
/// image border is ignored by the estimator.
inline SaccadicFlowParams fit_saccadic_flow(const std::vector<NormalizedSaccade>& saccades, int rounds = 3) {
  constexpr double kLogChi2Mean = -1.2703628454614782;  // E[log X], X ~ chi^2_1
  const auto n = static_cast<Eigen::Index>(saccades.size());
  if (n < 12) throw ValidationError("saccadic flow needs at least 12 saccades");
  Eigen::MatrixXd basis(n, 6);
  Eigen::VectorXd du(n), dv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = saccades[static_cast<std::size_t>(i)];
    const auto phi = flow_basis(s.from_u, s.from_v);
    for (int k = 0; k < 6; ++k) basis(i, k) = phi[static_cast<std::size_t>(k)];
    du(i) = s.to_u - s.from_u;
    dv(i) = s.to_v - s.from_v;
  }
  auto weighted_ls = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& w) -> Eigen::VectorXd {
    const Eigen::MatrixXd xw = basis.array().colwise() * w.array().sqrt();
    const Eigen::VectorXd yw = y.array() * w.array().sqrt();
    return xw.colPivHouseholderQr().solve(yw);
  };
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd wu = ones, wv = ones;
  Eigen::VectorXd bu, bv, gu, gv, ru, rv;
  for (int round = 0; round < rounds; ++round) {
    bu = weighted_ls(du, wu);
    bv = weighted_ls(dv, wv);
    ru = du - basis * bu;
    rv = dv - basis * bv;
    const Eigen::VectorXd zu = (ru.array().square() + 1e-300).log() - kLogChi2Mean;
    const Eigen::VectorXd zv = (rv.array().square() + 1e-300).log() - kLogChi2Mean;
    gu = weighted_ls(zu, ones);
    gv = weighted_ls(zv, ones);
    wu = (-(basis * gu).array()).exp();
    wv = (-(basis * gv).array()).exp();
  }
  const Eigen::VectorXd std_prod = ((basis * gu).array() * 0.5).exp() * ((basis * gv).array() * 0.5).exp();
  double rho = (ru.array() * rv.array() / std_prod.array()).mean();
  rho = std::clamp(rho, -0.99, 0.99);

  SaccadicFlowParams p;
  for (int k = 0; k < 6; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    p.mean_x[uk] = bu(k);
    p.mean_y[uk] = bv(k);
    p.log_var_x[uk] = gu(k);
    p.log_var_y[uk] = gv(k);
  }
  p.correlation = rho;
  return p;
}

struct SceneWalkFit {
  SceneWalkParams params;
  FitResult fit;
};

/// Maximum-likelihood SceneWalk parameters. Widths and time constants are
/// optimized in log-space; points violating the ordering constraints score -inf.
inline SceneWalkFit fit_scenewalk(const Dataset& ds, const SaliencyStore& saliency, int downsample = 1,
                                  SceneWalkParams initial = {}, int max_cycles = 10, double line_tolerance = 1e-3) {
  initial.validate();
  FitSpec spec;
  spec.names = {"log_sigma_attention_dva", "log_sigma_inhibition_dva", "log_tau_attention_ms",
                "log_tau_inhibition_ms",   "inhibition_strength",      "log_gamma"};
  spec.lower = {std::log(0.2), std::log(0.1), std::log(5.0), std::log(10.0), 0.0, std::log(0.2)};
  spec.upper = {std::log(40.0), std::log(30.0), std::log(5000.0), std::log(20000.0), 3.0, std::log(5.0)};
  spec.initial = {std::log(initial.sigma_attention_dva), std::log(initial.sigma_inhibition_dva),
                  std::log(initial.tau_attention_ms),    std::log(initial.tau_inhibition_ms),
                  initial.inhibition_strength,           std::log(initial.gamma)};
  for (std::size_t i = 0; i < spec.initial.size(); ++i) {
    spec.initial[i] = std::clamp(spec.initial[i], spec.lower[i], spec.upper[i]);
  }
  spec.max_cycles = max_cycles;
  spec.line_tolerance = line_tolerance;
  auto to_params = [initial](const std::vector<double>& x) {
    SceneWalkParams p = initial;
    p.sigma_attention_dva = std::exp(x[0]);
    p.sigma_inhibition_dva = std::exp(x[1]);
    p.tau_attention_ms = std::exp(x[2]);
    p.tau_inhibition_ms = std::exp(x[3]);
    p.inhibition_strength = x[4];
    p.gamma = std::exp(x[5]);
    return p;
  };
  spec.objective = [&](const std::vector<double>& x) {
    return detail::guarded(
        [&] { return mean_log_likelihood(SceneWalkModel(to_params(x)), ds, &saliency, downsample); });
  };
  SceneWalkFit out;
  out.fit = maximize(spec);
  out.params = to_params(out.fit.parameters);
  return out;
}

}  // namespace scanbench

#endif  // SCANBENCH_MODEL_FITTING_HPP
