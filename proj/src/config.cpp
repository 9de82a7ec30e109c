#include "ucc/config.hpp"

#include "ucc/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ucc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void KeyValues::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected key=value");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void KeyValues::set_line(const std::string& line) {
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("--set expects key=value, got '" + line + "'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

void KeyValues::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw FormatError("empty config key");
    values_[key] = value;
}

bool KeyValues::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KeyValues::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_[key] = true;
    return it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_[key] = true;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        throw FormatError("config key " + key + ": '" + it->second + "' is not a number");
    }
}

int KeyValues::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_[key] = true;
    int v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size())
        throw FormatError("config key " + key + ": '" + it->second + "' is not an integer");
    return v;
}

std::size_t KeyValues::get_size(const std::string& key, std::size_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_[key] = true;
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size())
        throw FormatError("config key " + key + ": '" + it->second + "' is not a count");
    return v;
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_[key] = true;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size())
        throw FormatError("config key " + key + ": '" + it->second + "' is not an integer");
    return v;
}

std::vector<std::string> KeyValues::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!used_.count(k)) out.push_back(k);
    return out;
}

std::string KeyValues::dump() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << "=" << v << "\n";
    return std::move(out).str();
}

void RunConfig::validate() const {
    model.kde.validate();
    train.validate();
    thresholds.validate();
    if (model.input_dim == 0) throw ContractError("model.input_dim must be positive");
    if (model.features == 0) throw ContractError("model.features must be positive");
    if (model.alpha < 0.0 || model.alpha > 1.0) throw ContractError("model.alpha must lie in [0,1]");
    if (model.ucc_lo < 1 || model.ucc_hi < model.ucc_lo)
        throw ContractError("ucc label range must satisfy 1 <= lo <= hi");
    if (bag_size < model.ucc_hi) throw ContractError("bag_size must be at least ucc_hi");
    if (cluster_method != "kmeans" && cluster_method != "spectral")
        throw ContractError("cluster.method must be kmeans or spectral");
    if (cluster_restarts == 0) throw ContractError("cluster.restarts must be positive");
    if (!(spectral_scale > 0.0)) throw ContractError("cluster.spectral_scale must be positive");
    if (patch_size == 0) throw ContractError("seg.patch_size must be positive");
    if (seg_mode != "pooled" && seg_mode != "per-image")
        throw ContractError("seg.mode must be pooled or per-image");
    if (val_fraction <= 0.0 || val_fraction >= 1.0)
        throw ContractError("train.val_fraction must lie in (0,1)");
}

namespace {

std::vector<std::size_t> parse_dims(const std::string& s, const std::string& key) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size() || v == 0)
            throw FormatError("config key " + key + ": '" + s + "' is not a comma list of sizes");
        out.push_back(v);
    }
    if (out.empty()) throw FormatError("config key " + key + ": empty layer list");
    return out;
}

}  // namespace

RunConfig resolve_config(const KeyValues& kv) {
    RunConfig c;

    c.model.input_dim = kv.get_size("model.input_dim", c.model.input_dim);
    c.model.features = kv.get_size("model.features", c.model.features);
    if (kv.has("model.feature_hidden"))
        c.model.feature_hidden = parse_dims(kv.get_str("model.feature_hidden", ""), "model.feature_hidden");
    if (kv.has("model.drn_hidden"))
        c.model.drn_hidden = parse_dims(kv.get_str("model.drn_hidden", ""), "model.drn_hidden");
    if (kv.has("model.decoder_hidden"))
        c.model.decoder_hidden = parse_dims(kv.get_str("model.decoder_hidden", ""), "model.decoder_hidden");
    c.model.kde.bins = kv.get_size("model.kde_bins", c.model.kde.bins);
    c.model.kde.bandwidth = kv.get_double("model.kde_bandwidth", c.model.kde.bandwidth);
    c.model.kde.range_lo = kv.get_double("model.kde_lo", c.model.kde.range_lo);
    c.model.kde.range_hi = kv.get_double("model.kde_hi", c.model.kde.range_hi);
    c.model.alpha = kv.get_double("model.alpha", c.model.alpha);
    c.model.ucc_lo = kv.get_int("model.ucc_lo", c.model.ucc_lo);
    c.model.ucc_hi = kv.get_int("model.ucc_hi", c.model.ucc_hi);
    std::string pooling = kv.get_str("model.pooling", "kde");
    if (pooling == "kde") c.model.pooling = Pooling::Kde;
    else if (pooling == "mean") c.model.pooling = Pooling::Mean;
    else throw FormatError("model.pooling must be kde or mean");

    c.train.learning_rate = kv.get_double("train.learning_rate", c.train.learning_rate);
    c.train.batch_size = kv.get_size("train.batch_size", c.train.batch_size);
    c.train.max_iters = kv.get_size("train.max_iters", c.train.max_iters);
    c.train.patience = kv.get_size("train.patience", c.train.patience);
    c.train.val_period = kv.get_size("train.val_period", c.train.val_period);
    c.val_fraction = kv.get_double("train.val_fraction", c.val_fraction);

    c.bag_size = kv.get_int("bags.size", c.bag_size);
    c.bags_per_label = kv.get_size("bags.per_label", c.bags_per_label);

    c.cluster_method = kv.get_str("cluster.method", c.cluster_method);
    c.cluster_restarts = kv.get_size("cluster.restarts", c.cluster_restarts);
    c.spectral_scale = kv.get_double("cluster.spectral_scale", c.spectral_scale);

    c.thresholds.ucc1_low = kv.get_double("seg.ucc1_low", c.thresholds.ucc1_low);
    c.thresholds.ucc1_high = kv.get_double("seg.ucc1_high", c.thresholds.ucc1_high);
    c.thresholds.ucc2_low = kv.get_double("seg.ucc2_low", c.thresholds.ucc2_low);
    c.thresholds.ucc2_high = kv.get_double("seg.ucc2_high", c.thresholds.ucc2_high);
    c.patch_size = kv.get_size("seg.patch_size", c.patch_size);
    c.seg_mode = kv.get_str("seg.mode", c.seg_mode);

    c.synth.num_classes = kv.get_int("synth.classes", c.synth.num_classes);
    c.synth.dim = kv.get_size("synth.dim", c.synth.dim);
    c.synth.per_class = kv.get_size("synth.per_class", c.synth.per_class);
    c.synth.scale = kv.get_double("synth.scale", c.synth.scale);
    c.synth.separation = kv.get_double("synth.separation", c.synth.separation);

    c.seg_images.count = kv.get_size("synth.images", c.seg_images.count);
    c.seg_images.height = kv.get_size("synth.image_height", c.seg_images.height);
    c.seg_images.width = kv.get_size("synth.image_width", c.seg_images.width);
    c.seg_images.noise = kv.get_double("synth.image_noise", c.seg_images.noise);
    c.seg_images.pure_negative_frac =
        kv.get_double("synth.pure_negative_frac", c.seg_images.pure_negative_frac);
    c.seg_images.pure_positive_frac =
        kv.get_double("synth.pure_positive_frac", c.seg_images.pure_positive_frac);

    c.seed = kv.get_u64("seed", c.seed);
    c.train.seed = kv.get_u64("train.seed", c.seed);
    c.synth.seed = kv.get_u64("synth.seed", c.seed);
    c.seg_images.seed = kv.get_u64("synth.image_seed", c.seed + 1);

    auto leftovers = kv.unused_keys();
    if (!leftovers.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : leftovers) msg += " " + k;
        throw FormatError(msg);
    }
    c.validate();
    return c;
}

}  // namespace ucc
