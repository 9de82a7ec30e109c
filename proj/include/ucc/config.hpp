#pragma once

#include "ucc/kde.hpp"
#include "ucc/model.hpp"
#include "ucc/segmentation.hpp"
#include "ucc/synthetic.hpp"

#include <map>
#include <string>
#include <vector>

namespace ucc {

/// Flat key=value store with dotted namespaces ("model.features=8").
/// '#' starts a comment; blank lines ignored. Later assignments win.
class KeyValues {
public:
    void load_file(const std::string& path);
    void set_line(const std::string& line);  // "key=value", the --set payload
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

    /// Keys actually consumed by the getters; unknown-key detection.
    std::vector<std::string> unused_keys() const;
    std::string dump() const;  // sorted key=value lines, the run snapshot

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> used_;
};

/// Every tunable of a run, resolved from defaults + config file + --set.
struct RunConfig {
    ModelSpec model;
    TrainConfig train;
    int bag_size = 16;
    std::size_t bags_per_label = 300;
    double val_fraction = 0.2;

    std::string cluster_method = "kmeans";  // kmeans | spectral
    std::size_t cluster_restarts = 10;
    double spectral_scale = 0.5;

    SegThresholds thresholds;
    std::size_t patch_size = 16;
    std::string seg_mode = "pooled";  // pooled | per-image

    SyntheticSpec synth;
    SegImageSpec seg_images;

    std::uint64_t seed = 1;

    void validate() const;
};

/// Applies the "namespace.key" entries of kv onto the defaults.
RunConfig resolve_config(const KeyValues& kv);

}  // namespace ucc
