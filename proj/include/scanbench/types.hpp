#ifndef SCANBENCH_TYPES_HPP
#define SCANBENCH_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scanbench {

/// Input that violates a documented precondition or file format.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NSS is undefined on a map with zero variance.
class DegenerateMap : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct StimulusMeta {
  std::string image_id;
  int width_px = 0;
  int height_px = 0;
  double px_per_dva = 1.0;

  void validate() const {
    if (width_px < 1 || height_px < 1) {
      throw ValidationError("stimulus '" + image_id + "': dimensions must be positive");
    }
    if (!(px_per_dva > 0.0) || !std::isfinite(px_per_dva)) {
      throw ValidationError("stimulus '" + image_id + "': px_per_dva must be positive");
    }
  }

  double center_x() const { return width_px / 2.0; }
  double center_y() const { return height_px / 2.0; }

  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x < width_px && y < height_px;
  }

  friend bool operator==(const StimulusMeta&, const StimulusMeta&) = default;
};

struct Fixation {
  double x_px = 0.0;
  double y_px = 0.0;
  std::optional<double> duration_ms;
  // Marked invalid by the eye tracker (or out of bounds at index 0).
  bool invalid = false;

  friend bool operator==(const Fixation&, const Fixation&) = default;
};

struct Scanpath {
  std::string image_id;
  std::string subject_id;
  std::vector<Fixation> fixations;
  bool forced_initial = false;

  std::size_t size() const { return fixations.size(); }

  friend bool operator==(const Scanpath&, const Scanpath&) = default;
};

struct Dataset {
  std::string name;
  std::map<std::string, StimulusMeta> stimuli;
  std::vector<Scanpath> scanpaths;

  const StimulusMeta& stimulus(const std::string& image_id) const {
    auto it = stimuli.find(image_id);
    if (it == stimuli.end()) {
      throw ValidationError("unknown image_id '" + image_id + "'");
    }
    return it->second;
  }

  std::vector<std::string> image_ids() const {
    std::vector<std::string> ids;
    ids.reserve(stimuli.size());
    for (const auto& [id, meta] : stimuli) ids.push_back(id);
    return ids;
  }

  std::vector<std::string> subject_ids() const {
    std::map<std::string, int> seen;
    for (const auto& sp : scanpaths) seen[sp.subject_id] = 1;
    std::vector<std::string> ids;
    for (const auto& [id, unused] : seen) ids.push_back(id);
    return ids;
  }

  /// Number of fixations that get scored (every fixation after the first).
  std::size_t scored_fixation_count() const {
    std::size_t n = 0;
    for (const auto& sp : scanpaths) n += sp.size() > 0 ? sp.size() - 1 : 0;
    return n;
  }

  void validate() const {
    for (const auto& [id, meta] : stimuli) {
      if (id != meta.image_id) throw ValidationError("stimulus key mismatch for '" + id + "'");
      meta.validate();
    }
    for (const auto& sp : scanpaths) {
      if (sp.fixations.empty()) {
        throw ValidationError("empty scanpath for image '" + sp.image_id + "'");
      }
      stimulus(sp.image_id);
    }
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Grid geometry of a priority map over one stimulus. Cell (c, r) covers the
/// pixel square [c*ds, (c+1)*ds) x [r*ds, (r+1)*ds).
struct GridGeometry {
  int width_px = 0;
  int height_px = 0;
  int downsample = 1;

  static GridGeometry of(const StimulusMeta& meta, int downsample = 1) {
    if (downsample < 1 || (downsample & (downsample - 1)) != 0) {
      throw ValidationError("downsample factor must be a positive power of two");
    }
    return GridGeometry{meta.width_px, meta.height_px, downsample};
  }

  int cols() const { return (width_px + downsample - 1) / downsample; }
  int rows() const { return (height_px + downsample - 1) / downsample; }
  std::size_t cells() const { return static_cast<std::size_t>(cols()) * rows(); }

  double cell_center_x(int col) const { return (col + 0.5) * downsample; }
  double cell_center_y(int row) const { return (row + 0.5) * downsample; }

  /// Row-major cell index of a continuous pixel position, or nullopt outside the grid.
  std::optional<std::size_t> cell_of(double x, double y) const {
    if (!(x >= 0.0) || !(y >= 0.0) || x >= width_px || y >= height_px) return std::nullopt;
    const auto col = static_cast<std::size_t>(std::floor(x / downsample));
    const auto row = static_cast<std::size_t>(std::floor(y / downsample));
    return row * static_cast<std::size_t>(cols()) + col;
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

enum class MapKind : std::uint8_t { priority = 0, probability = 1 };

/// Dense row-major grid of priorities over a stimulus. Probability maps are
/// validated at construction: nonnegative, finite, summing to 1 within 1e-9.
class PriorityMap {
 public:
  static constexpr double kProbabilityTolerance = 1e-9;

  PriorityMap() = default;

  PriorityMap(int width, int height, std::vector<double> values, MapKind kind, int downsample = 1)
      : width_(width), height_(height), downsample_(downsample), kind_(kind), values_(std::move(values)) {
    if (width_ < 1 || height_ < 1) throw ValidationError("priority map dimensions must be positive");
    if (downsample_ < 1) throw ValidationError("downsample factor must be positive");
    if (values_.size() != static_cast<std::size_t>(width_) * height_) {
      throw ValidationError("priority map value count does not match its dimensions");
    }
    double total = 0.0;
    for (double v : values_) {
      if (!std::isfinite(v)) throw ValidationError("priority map contains non-finite values");
      if (kind_ == MapKind::probability && v < 0.0) {
        throw ValidationError("probability map contains negative values");
      }
      total += v;
    }
    if (kind_ == MapKind::probability && std::abs(total - 1.0) > kProbabilityTolerance) {
      throw ValidationError("probability map does not sum to 1 (sum = " + std::to_string(total) + ")");
    }
  }

  PriorityMap(const GridGeometry& geometry, std::vector<double> values, MapKind kind)
      : PriorityMap(geometry.cols(), geometry.rows(), std::move(values), kind, geometry.downsample) {}

  /// Normalizes nonnegative weights into a probability map.
  static PriorityMap from_weights(const GridGeometry& geometry, std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights must be finite and nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw ValidationError("cannot normalize an all-zero weight grid");
    for (double& w : weights) w /= total;
    return PriorityMap(geometry, std::move(weights), MapKind::probability);
  }

  static PriorityMap uniform(const GridGeometry& geometry) {
    const double p = 1.0 / static_cast<double>(geometry.cells());
    return PriorityMap(geometry, std::vector<double>(geometry.cells(), p), MapKind::probability);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int downsample() const { return downsample_; }
  MapKind kind() const { return kind_; }
  bool is_probability() const { return kind_ == MapKind::probability; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(int col, int row) const { return values_[static_cast<std::size_t>(row) * width_ + col]; }

  bool same_grid(const PriorityMap& other) const {
    return width_ == other.width_ && height_ == other.height_ && downsample_ == other.downsample_;
  }

  /// Cell index owning a fixation; throws when the fixation lies outside the grid.
  std::size_t cell_of(const Fixation& fix) const {
    if (!(fix.x_px >= 0.0) || !(fix.y_px >= 0.0)) throw ValidationError("fixation outside grid");
    const double col = std::floor(fix.x_px / downsample_);
    const double row = std::floor(fix.y_px / downsample_);
    if (col >= width_ || row >= height_) throw ValidationError("fixation outside grid");
    return static_cast<std::size_t>(row) * width_ + static_cast<std::size_t>(col);
  }

  friend bool operator==(const PriorityMap&, const PriorityMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int downsample_ = 1;
  MapKind kind_ = MapKind::priority;
  std::vector<double> values_;
};

}  // namespace scanbench

#endif  // SCANBENCH_TYPES_HPP
