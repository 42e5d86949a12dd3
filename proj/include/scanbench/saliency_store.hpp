#ifndef SCANBENCH_SALIENCY_STORE_HPP
#define SCANBENCH_SALIENCY_STORE_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "models.hpp"
#include "smap.hpp"
#include "types.hpp"

namespace scanbench {

/// Per-image saliency maps, read from `<dir>/<image_id>.smap` and brought to
/// the evaluation grid. Loaded eagerly so lookups are read-only.
class SaliencyStore {
 public:
  SaliencyStore() = default;

  void put(const std::string& image_id, PriorityMap map) {
    maps_[image_id] = std::make_shared<const PriorityMap>(std::move(map));
  }

  static SaliencyStore load(const std::string& dir, const Dataset& ds, int downsample) {
    SaliencyStore store;
    for (const auto& [id, meta] : ds.stimuli) {
      const auto path = std::filesystem::path(dir) / (id + ".smap");
      if (!std::filesystem::exists(path)) {
        throw ValidationError("missing saliency map for image '" + id + "' (" + path.string() + ")");
      }
      store.put(id, fit_to_grid(read_smap(path.string()), GridGeometry::of(meta, downsample)));
    }
    return store;
  }

  bool empty() const { return maps_.empty(); }

  std::shared_ptr<const PriorityMap> find(const std::string& image_id) const {
    auto it = maps_.find(image_id);
    return it == maps_.end() ? nullptr : it->second;
  }

 private:
  std::map<std::string, std::shared_ptr<const PriorityMap>> maps_;
};

inline Stimulus make_stimulus(const Dataset& ds, const Scanpath& sp, int downsample, const SaliencyStore* saliency,
                              bool require_saliency) {
  Stimulus s = Stimulus::of(ds.stimulus(sp.image_id), downsample);
  s.subject_id = sp.subject_id;
  if (saliency) s.saliency = saliency->find(sp.image_id);
  if (require_saliency && !s.saliency) throw ValidationError("missing saliency map for image '" + sp.image_id + "'");
  return s;
}

}  // namespace scanbench

#endif  // SCANBENCH_SALIENCY_STORE_HPP
