#ifndef SCANBENCH_METRICS_HPP
#define SCANBENCH_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "types.hpp"

namespace scanbench {

enum class Metric { LL, IG, AUC, NSS };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::LL: return "LL";
    case Metric::IG: return "IG";
    case Metric::AUC: return "AUC";
    case Metric::NSS: return "NSS";
  }
  return "?";
}

inline Metric parse_metric(std::string text) {
  std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::toupper(c); });
  if (text == "LL") return Metric::LL;
  if (text == "IG") return Metric::IG;
  if (text == "AUC") return Metric::AUC;
  if (text == "NSS") return Metric::NSS;
  throw ValidationError("unknown metric '" + text + "'");
}

struct FixationScore {
  std::string image_id;
  std::string subject_id;
  std::size_t scanpath_index = 0;
  std::size_t fixation_index = 1;  // fixation 0 is never scored
  Metric metric = Metric::LL;
  double value = 0.0;

  friend bool operator==(const FixationScore&, const FixationScore&) = default;
};

/// Probability floor applied per cell before taking logarithms.
inline constexpr double kProbabilityFloor = 0x1p-32;

/// Log2-probability lookup over a probability map with the floor applied.
/// When no cell is below the floor the map is used as is; otherwise floored
/// cells are raised to the floor and the map is renormalized.
class LogProbability {
 public:
  explicit LogProbability(const PriorityMap& map) : map_(&map) {
    if (!map.is_probability()) throw ValidationError("log-likelihood requires a probability map");
    double floored_total = 0.0;
    bool any_floored = false;
    for (double p : map.values()) {
      if (p < kProbabilityFloor) {
        any_floored = true;
        floored_total += kProbabilityFloor;
      } else {
        floored_total += p;
      }
    }
    if (any_floored) log2_total_ = std::log2(floored_total);
  }

  double log2_at(std::size_t cell) const {
    const double p = std::max((*map_)[cell], kProbabilityFloor);
    return std::log2(p) - log2_total_;
  }

  double log2_at(const Fixation& fix) const { return log2_at(map_->cell_of(fix)); }

 private:
  const PriorityMap* map_;
  double log2_total_ = 0.0;
};

/// Log-likelihood in bits relative to a uniform distribution over the same grid.
inline double log_likelihood(const PriorityMap& map, const Fixation& fix) {
  const double uniform = 1.0 / static_cast<double>(map.size());
  return LogProbability(map).log2_at(fix) - std::log2(uniform);
}

inline double information_gain(const PriorityMap& map, const PriorityMap& baseline, const Fixation& fix) {
  if (!map.same_grid(baseline)) throw ValidationError("model and baseline maps have different grids");
  const std::size_t cell = map.cell_of(fix);
  return LogProbability(map).log2_at(cell) - LogProbability(baseline).log2_at(cell);
}

/// Normalized rank of a cell among all cells, ties counted half.
inline double rank_score(const std::vector<double>& values, double v) {
  std::size_t below = 0;
  std::size_t equal = 0;
  for (double x : values) {
    below += x < v;
    equal += x == v;
  }
  return (static_cast<double>(below) + 0.5 * static_cast<double>(equal)) / static_cast<double>(values.size());
}

/// AUC with the fixated cell as the single positive and every cell as a negative.
inline double auc_uniform(const PriorityMap& map, const Fixation& fix) {
  return rank_score(map.values(), map[map.cell_of(fix)]);
}

inline double nss(const PriorityMap& map, const Fixation& fix) {
  const auto& v = map.values();
  const std::size_t cell = map.cell_of(fix);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi) throw DegenerateMap("NSS is undefined on a constant map");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  return (v[cell] - mean) / sd;
}

/// Mean over fixations within each image, then mean over images.
inline double aggregate(const std::vector<FixationScore>& scores, Metric metric) {
  std::map<std::string, std::pair<double, std::size_t>> per_image;
  for (const auto& s : scores) {
    if (s.metric != metric) continue;
    auto& [sum, count] = per_image[s.image_id];
    sum += s.value;
    ++count;
  }
  if (per_image.empty()) throw ValidationError(std::string("no scores for metric ") + metric_name(metric));
  double total = 0.0;
  for (const auto& [id, acc] : per_image) total += acc.first / static_cast<double>(acc.second);
  return total / static_cast<double>(per_image.size());
}

/// Replaces values by mid-rank fractional ranks in (0, 1), ties sharing their mean rank.
inline PriorityMap histogram_equalize(const PriorityMap& map) {
  const auto& v = map.values();
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> out(v.size());
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    // cells ranked i..j-1 (0-based) share (below + equal/2) / n
    const double value = (static_cast<double>(i) + 0.5 * static_cast<double>(j - i)) / n;
    for (std::size_t k = i; k < j; ++k) out[order[k]] = value;
    i = j;
  }
  return PriorityMap(map.width(), map.height(), std::move(out), MapKind::priority, map.downsample());
}

inline void write_scores_csv(const std::vector<FixationScore>& scores, std::ostream& os) {
  os << "image_id,subject_id,scanpath_index,fixation_index,metric,value\n";
  for (const auto& s : scores) {
    os << s.image_id << ',' << s.subject_id << ',' << s.scanpath_index << ',' << s.fixation_index << ','
       << metric_name(s.metric) << ',' << detail::shortest_double(s.value) << '\n';
  }
}

inline std::vector<FixationScore> read_scores_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "image_id,subject_id,scanpath_index,fixation_index,metric,value") {
    throw ValidationError("score table has an unexpected header");
  }
  std::vector<FixationScore> scores;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1) {
      cells.push_back(line.substr(start, pos - start));
    }
    cells.push_back(line.substr(start));
    if (cells.size() != 6) throw ValidationError("score table line " + std::to_string(lineno) + ": expected 6 cells");
    FixationScore s;
    s.image_id = cells[0];
    s.subject_id = cells[1];
    try {
      s.scanpath_index = std::stoul(cells[2]);
      s.fixation_index = std::stoul(cells[3]);
      s.value = std::stod(cells[5]);
    } catch (const std::logic_error&) {
      throw ValidationError("score table line " + std::to_string(lineno) + ": bad number");
    }
    s.metric = parse_metric(cells[4]);
    scores.push_back(std::move(s));
  }
  return scores;
}

inline void write_scores_csv(const std::vector<FixationScore>& scores, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  write_scores_csv(scores, os);
}

inline std::vector<FixationScore> read_scores_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot read score table '" + path + "'");
  return read_scores_csv(is);
}

}  // namespace scanbench

#endif  // SCANBENCH_METRICS_HPP
