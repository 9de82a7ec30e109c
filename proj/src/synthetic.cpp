#include "ucc/synthetic.hpp"

#include "ucc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ucc {

void SyntheticSpec::validate() const {
    if (num_classes < 1) throw ContractError("num_classes must be >= 1");
    if (dim == 0) throw ContractError("dim must be positive");
    if (per_class == 0) throw ContractError("per_class must be positive");
    if (!(scale > 0.0)) throw ContractError("scale must be positive");
    if (!(separation > 0.0)) throw ContractError("separation must be positive");
    // loose feasibility check for rejection sampling in the unit box
    if (separation * scale > std::sqrt(static_cast<double>(dim)))
        throw ContractError("separation * scale exceeds the unit-box diameter");
}

InstancePool gen_synthetic_pool(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const double min_dist = spec.separation * spec.scale;
    std::vector<std::vector<double>> means;
    std::size_t attempts = 0;
    while (means.size() < static_cast<std::size_t>(spec.num_classes)) {
        if (++attempts > 100000)
            throw ContractError("could not place cluster means at the requested separation");
        std::vector<double> cand(spec.dim);
        for (double& v : cand) v = 0.1 + 0.8 * unif(rng);
        bool ok = true;
        for (const auto& m : means) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < spec.dim; ++i) {
                double diff = cand[i] - m[i];
                d2 += diff * diff;
            }
            if (d2 < min_dist * min_dist) {
                ok = false;
                break;
            }
        }
        if (ok) means.push_back(std::move(cand));
    }

    const std::size_t m = static_cast<std::size_t>(spec.num_classes) * spec.per_class;
    InstancePool pool;
    pool.instances = Matrix(m, spec.dim);
    pool.labels.resize(m);
    pool.num_classes = spec.num_classes;

    std::normal_distribution<double> noise(0.0, spec.scale);
    std::size_t r = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (std::size_t i = 0; i < spec.per_class; ++i, ++r) {
            auto dst = pool.instances.row(r);
            for (std::size_t d = 0; d < spec.dim; ++d)
                dst[d] = std::clamp(means[static_cast<std::size_t>(c)][d] + noise(rng), 0.0, 1.0);
            pool.labels[r] = c + 1;
        }
    }
    pool.validate();
    return pool;
}

void SegImageSpec::validate() const {
    if (count == 0) throw ContractError("image count must be positive");
    if (height < 4 || width < 4) throw ContractError("images must be at least 4x4");
    if (!(noise >= 0.0)) throw ContractError("noise must be non-negative");
    if (negative_level < 0.0 || negative_level > 1.0 || positive_level < 0.0 ||
        positive_level > 1.0)
        throw ContractError("texture levels must lie in [0,1]");
    if (negative_level == positive_level)
        throw ContractError("texture levels must differ");
    if (pure_negative_frac < 0.0 || pure_positive_frac < 0.0 ||
        pure_negative_frac + pure_positive_frac > 1.0)
        throw ContractError("pure-image fractions must be non-negative and sum to at most 1");
}

std::vector<LabeledImage> gen_seg_images(const SegImageSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, spec.noise);

    const std::size_t n_neg = static_cast<std::size_t>(
        std::round(spec.pure_negative_frac * static_cast<double>(spec.count)));
    const std::size_t n_pos = static_cast<std::size_t>(
        std::round(spec.pure_positive_frac * static_cast<double>(spec.count)));

    std::vector<LabeledImage> images;
    images.reserve(spec.count);
    for (std::size_t idx = 0; idx < spec.count; ++idx) {
        LabeledImage img;
        img.height = spec.height;
        img.width = spec.width;
        img.channels = 1;
        img.pixels.resize(spec.height * spec.width);
        img.mask.resize(spec.height * spec.width);

        if (idx < n_neg) {
            std::fill(img.mask.begin(), img.mask.end(), 0);
        } else if (idx < n_neg + n_pos) {
            std::fill(img.mask.begin(), img.mask.end(), 1);
        } else {
            // smooth sinusoidal boundary around a random split position
            double split = 0.35 + 0.3 * unif(rng);
            double amp = (0.05 + 0.1 * unif(rng)) * static_cast<double>(spec.width);
            double freq = 1.0 + 2.0 * unif(rng);
            double phase = 2.0 * std::numbers::pi * unif(rng);
            for (std::size_t y = 0; y < spec.height; ++y) {
                double arg = freq * 2.0 * std::numbers::pi * static_cast<double>(y) /
                                 static_cast<double>(spec.height) +
                             phase;
                double boundary = split * static_cast<double>(spec.width) + amp * std::sin(arg);
                for (std::size_t x = 0; x < spec.width; ++x)
                    img.mask[y * spec.width + x] =
                        static_cast<double>(x) >= boundary ? 1 : 0;
            }
        }

        for (std::size_t p = 0; p < img.mask.size(); ++p) {
            double level = img.mask[p] ? spec.positive_level : spec.negative_level;
            img.pixels[p] = std::clamp(level + noise(rng), 0.0, 1.0);
        }
        img.validate();
        images.push_back(std::move(img));
    }
    return images;
}

}  // namespace ucc
