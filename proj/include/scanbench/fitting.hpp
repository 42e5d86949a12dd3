#ifndef SCANBENCH_FITTING_HPP
#define SCANBENCH_FITTING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "types.hpp"

namespace scanbench {

/// Box-constrained maximization problem. The objective is typically a mean
/// per-fixation log-likelihood in bits.
struct FitSpec {
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> initial;
  std::function<double(const std::vector<double>&)> objective;
  std::string split = "train_all";
  double relative_tolerance = 1e-6;
  int max_cycles = 50;
  // Golden-section stops when the bracket is narrower than this fraction of the bound width.
  double line_tolerance = 1e-7;

  void validate() const {
    const auto n = names.size();
    if (lower.size() != n || upper.size() != n || initial.size() != n) {
      throw ValidationError("fit spec: names, bounds and initial values differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i])) {
        throw ValidationError("fit spec: invalid bounds for '" + names[i] + "'");
      }
      if (!(initial[i] >= lower[i] && initial[i] <= upper[i])) {
        throw ValidationError("fit spec: initial value of '" + names[i] + "' is outside its bounds");
      }
    }
    if (!objective) throw ValidationError("fit spec: missing objective");
  }
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> parameters;
  double objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::string split;
  std::optional<std::uint64_t> seed;

  double get(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return parameters[i];
    }
    throw ValidationError("fit result has no parameter '" + name + "'");
  }

  nlohmann::json to_json() const {
    nlohmann::json params = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = parameters[i];
    nlohmann::json j = {{"parameters", params},
                        {"objective_bits_per_fix", objective},
                        {"split", split},
                        {"iterations", iterations}};
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    return j;
  }
};

/// Bounded coordinate ascent with a golden-section line search per
/// coordinate. Cycles until the relative improvement drops below
/// relative_tolerance or max_cycles is reached. Never leaves the bounds and never
/// returns a point worse than the initial one.
inline FitResult maximize(const FitSpec& spec) {
  spec.validate();
  FitResult result;
  result.names = spec.names;
  result.split = spec.split;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = spec.objective(x);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };

  std::vector<double> x = spec.initial;
  double fx = eval(x);
  if (!std::isfinite(fx)) throw ValidationError("objective is not finite at the initial point");

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int cycle = 0; cycle < spec.max_cycles; ++cycle) {
    const double before = fx;
    for (std::size_t k = 0; k < x.size(); ++k) {
      std::vector<double> probe = x;
      auto along = [&](double t) {
        probe[k] = t;
        return eval(probe);
      };
      double a = spec.lower[k];
      double b = spec.upper[k];
      const double tol = spec.line_tolerance * (b - a);
      double c = b - inv_phi * (b - a);
      double d = a + inv_phi * (b - a);
      double fc = along(c);
      double fd = along(d);
      while (b - a > tol) {
        if (fc >= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - inv_phi * (b - a);
          fc = along(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + inv_phi * (b - a);
          fd = along(d);
        }
      }
      double best_t = x[k];
      double best_f = fx;
      for (double t : {fc >= fd ? c : d, spec.lower[k], spec.upper[k]}) {
        const double f = (t == c) ? fc : (t == d) ? fd : along(t);
        if (f > best_f) {
          best_f = f;
          best_t = t;
        }
      }
      x[k] = best_t;
      fx = best_f;
    }
    result.iterations = cycle + 1;
    if (fx - before <= spec.relative_tolerance * std::abs(before)) break;
  }
  result.parameters = x;
  result.objective = fx;
  return result;
}

/// One leave-one-subject-out split; indices refer to Dataset::scanpaths.
struct LosoSplit {
  std::string held_out_subject;
  std::vector<std::size_t> held_out;
  std::vector<std::size_t> training;
};

inline std::vector<LosoSplit> loso_splits(const Dataset& ds) {
  const auto subjects = ds.subject_ids();
  if (subjects.size() < 2) throw ValidationError("leave-one-subject-out needs at least 2 subjects");
  std::vector<LosoSplit> splits;
  for (const auto& subject : subjects) {
    LosoSplit split;
    split.held_out_subject = subject;
    for (std::size_t i = 0; i < ds.scanpaths.size(); ++i) {
      (ds.scanpaths[i].subject_id == subject ? split.held_out : split.training).push_back(i);
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

/// Seeded uniform sample of `n_images` images together with all their scanpaths.
inline Dataset subset_sample(const Dataset& ds, std::size_t n_images, std::uint64_t seed) {
  auto ids = ds.image_ids();
  if (n_images > ids.size()) {
    throw ValidationError("requested " + std::to_string(n_images) + " images but the dataset has " +
                          std::to_string(ids.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::set<std::string> keep(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_images));
  Dataset out;
  out.name = ds.name;
  for (const auto& id : keep) out.stimuli.emplace(id, ds.stimuli.at(id));
  for (const auto& sp : ds.scanpaths) {
    if (keep.count(sp.image_id)) out.scanpaths.push_back(sp);
  }
  return out;
}

}  // namespace scanbench

#endif  // SCANBENCH_FITTING_HPP
