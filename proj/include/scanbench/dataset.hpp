#ifndef SCANBENCH_DATASET_HPP
#define SCANBENCH_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "types.hpp"

namespace scanbench {

enum class OutOfBoundsPolicy { reject, clamp };

struct LoadOptions {
  OutOfBoundsPolicy out_of_bounds = OutOfBoundsPolicy::reject;
  // An out-of-bounds fixation at index 0 is flagged invalid instead of going
  // through the out-of-bounds policy, so preprocessing can replace it.
  bool flag_invalid_initial = true;
};

struct PreprocessPolicy {
  bool inject_central = false;
  bool replace_invalid_initial = false;
  bool dedup = true;
};

namespace detail {

inline std::string shortest_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError("line " + std::to_string(line) + ": missing field '" + key + "'");
  }
  return *it;
}

inline std::string text_id(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace detail

/// Rounds a coordinate to the 6 fractional digits the scanpath format stores.
inline double quantize_coordinate(double v) {
  return std::strtod(detail::fixed6(v).c_str(), nullptr);
}

/// Serializes one scanpath as a single JSON line (no trailing newline).
inline std::string scanpath_to_json_line(const Scanpath& sp, const StimulusMeta& meta) {
  std::string out = "{\"image_id\":" + nlohmann::json(sp.image_id).dump();
  out += ",\"subject_id\":" + nlohmann::json(sp.subject_id).dump();
  out += ",\"width_px\":" + std::to_string(meta.width_px);
  out += ",\"height_px\":" + std::to_string(meta.height_px);
  out += ",\"px_per_dva\":" + detail::shortest_double(meta.px_per_dva);
  out += ",\"forced_initial\":";
  out += sp.forced_initial ? "true" : "false";
  out += ",\"fixations\":[";
  for (std::size_t i = 0; i < sp.fixations.size(); ++i) {
    const auto& f = sp.fixations[i];
    if (i) out += ',';
    out += "{\"x\":" + detail::fixed6(f.x_px) + ",\"y\":" + detail::fixed6(f.y_px) + ",\"duration_ms\":";
    out += f.duration_ms ? detail::shortest_double(*f.duration_ms) : "null";
    if (f.invalid) out += ",\"invalid\":true";
    out += '}';
  }
  out += "]}";
  return out;
}

inline void save_dataset(const Dataset& ds, std::ostream& os) {
  for (const auto& sp : ds.scanpaths) os << scanpath_to_json_line(sp, ds.stimulus(sp.image_id)) << '\n';
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  save_dataset(ds, os);
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline Dataset load_dataset(std::istream& is, const std::string& name, const LoadOptions& options = {}) {
  Dataset ds;
  ds.name = name;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto at = [lineno](const std::string& msg) {
      return ValidationError("line " + std::to_string(lineno) + ": " + msg);
    };
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw at(std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) throw at("record is not a JSON object");
    try {
      StimulusMeta meta;
      meta.image_id = detail::text_id(detail::require(rec, "image_id", lineno));
      meta.width_px = detail::require(rec, "width_px", lineno).get<int>();
      meta.height_px = detail::require(rec, "height_px", lineno).get<int>();
      meta.px_per_dva = detail::require(rec, "px_per_dva", lineno).get<double>();
      try {
        meta.validate();
      } catch (const ValidationError& e) {
        throw at(e.what());
      }
      auto [it, inserted] = ds.stimuli.emplace(meta.image_id, meta);
      if (!inserted && !(it->second == meta)) {
        throw at("stimulus metadata for '" + meta.image_id + "' conflicts with an earlier record");
      }

      Scanpath sp;
      sp.image_id = meta.image_id;
      sp.subject_id = detail::text_id(detail::require(rec, "subject_id", lineno));
      sp.forced_initial = rec.value("forced_initial", false);
      const auto& fixations = detail::require(rec, "fixations", lineno);
      if (!fixations.is_array()) throw at("'fixations' is not an array");
      for (std::size_t i = 0; i < fixations.size(); ++i) {
        const auto& jf = fixations[i];
        Fixation f;
        f.x_px = detail::require(jf, "x", lineno).get<double>();
        f.y_px = detail::require(jf, "y", lineno).get<double>();
        if (!std::isfinite(f.x_px) || !std::isfinite(f.y_px)) throw at("non-finite fixation coordinate");
        if (auto d = jf.find("duration_ms"); d != jf.end() && !d->is_null()) {
          f.duration_ms = d->get<double>();
          if (!(*f.duration_ms >= 0.0)) throw at("negative fixation duration");
        }
        f.invalid = jf.value("invalid", false);
        if (!meta.contains(f.x_px, f.y_px)) {
          if (i == 0 && options.flag_invalid_initial) {
            f.invalid = true;
          } else if (options.out_of_bounds == OutOfBoundsPolicy::reject) {
            throw at("fixation " + std::to_string(i) + " lies outside the " + std::to_string(meta.width_px) + "x" +
                     std::to_string(meta.height_px) + " stimulus");
          } else {
            f.x_px = std::clamp(f.x_px, 0.0, meta.width_px - 1.0);
            f.y_px = std::clamp(f.y_px, 0.0, meta.height_px - 1.0);
          }
        }
        sp.fixations.push_back(f);
      }
      if (sp.fixations.empty()) throw at("scanpath has no fixations");
      ds.scanpaths.push_back(std::move(sp));
    } catch (const nlohmann::json::exception& e) {
      throw at(std::string("bad field type: ") + e.what());
    }
  }
  return ds;
}

inline Dataset load_dataset(const std::string& path, const LoadOptions& options = {}) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open dataset '" + path + "'");
  auto name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  return load_dataset(is, name, options);
}

/// Applies, in order: invalid-initial replacement, central-fixation injection,
/// and collapse of exact consecutive duplicates. Idempotent.
inline Scanpath preprocess_scanpath(Scanpath sp, const StimulusMeta& meta, const PreprocessPolicy& policy) {
  const Fixation center{meta.center_x(), meta.center_y(), std::nullopt, false};
  if (policy.replace_invalid_initial && !sp.fixations.empty()) {
    auto& first = sp.fixations.front();
    if (first.invalid || !meta.contains(first.x_px, first.y_px)) {
      const auto duration = first.duration_ms;
      first = center;
      first.duration_ms = duration;
      sp.forced_initial = true;
    }
  }
  if (policy.inject_central && !sp.forced_initial) {
    sp.fixations.insert(sp.fixations.begin(), center);
    sp.forced_initial = true;
  }
  if (policy.dedup && sp.fixations.size() > 1) {
    std::vector<Fixation> kept;
    kept.reserve(sp.fixations.size());
    for (const auto& f : sp.fixations) {
      if (!kept.empty() && kept.back().x_px == f.x_px && kept.back().y_px == f.y_px) {
        auto& prev = kept.back();
        if (f.duration_ms) prev.duration_ms = prev.duration_ms.value_or(0.0) + *f.duration_ms;
        continue;
      }
      kept.push_back(f);
    }
    sp.fixations = std::move(kept);
  }
  return sp;
}

inline Dataset preprocess_dataset(Dataset ds, const PreprocessPolicy& policy) {
  for (auto& sp : ds.scanpaths) sp = preprocess_scanpath(std::move(sp), ds.stimulus(sp.image_id), policy);
  return ds;
}

inline double saccade_amplitude_dva(const Fixation& a, const Fixation& b, const StimulusMeta& meta) {
  return std::hypot(b.x_px - a.x_px, b.y_px - a.y_px) / meta.px_per_dva;
}

}  // namespace scanbench

#endif  // SCANBENCH_DATASET_HPP
