#include "ucc/segmentation.hpp"

#include "ucc/cluster.hpp"
#include "ucc/errors.hpp"
#include "ucc/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ucc {

void LabeledImage::validate() const {
    if (height == 0 || width == 0 || channels == 0)
        throw ShapeError("image dimensions must be positive");
    if (pixels.size() != height * width * channels)
        throw ShapeError("pixel buffer size does not match image dimensions");
    if (mask.size() != height * width)
        throw ShapeError("mask size does not match image dimensions");
    for (std::uint8_t m : mask)
        if (m > 1) throw ContractError("mask values must be 0 or 1");
    if (!all_finite(pixels)) throw NumericError("image contains non-finite pixels");
}

double LabeledImage::positive_fraction() const {
    std::size_t pos = 0;
    for (std::uint8_t m : mask) pos += m;
    return static_cast<double>(pos) / static_cast<double>(mask.size());
}

void SegThresholds::validate() const {
    if (!(ucc1_low < ucc2_low && ucc2_low <= ucc2_high && ucc2_high < ucc1_high))
        throw ContractError("segmentation thresholds must satisfy ucc1_low < ucc2_low <= ucc2_high < ucc1_high");
    if (ucc1_low < 0.0 || ucc1_high > 1.0)
        throw ContractError("segmentation thresholds must lie in [0,1]");
}

std::optional<int> label_image(const LabeledImage& img, const SegThresholds& t) {
    img.validate();
    t.validate();
    double p = img.positive_fraction();
    if (p < t.ucc1_low || p > t.ucc1_high) return 1;
    if (p > t.ucc2_low && p < t.ucc2_high) return 2;
    return std::nullopt;
}

namespace {

/// Reflect an out-of-range coordinate back into [0, n) without repeating
/// the edge sample.
std::size_t reflect(std::size_t x, std::size_t n) {
    if (x < n) return x;
    std::size_t over = x - n;
    std::size_t r = n >= 2 ? n - 2 - (over % (n - 1)) : 0;
    return r;
}

std::size_t div_up(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

std::pair<std::size_t, std::size_t> patch_grid(const LabeledImage& img, std::size_t patch_size) {
    if (patch_size == 0) throw ContractError("patch_size must be positive");
    return {div_up(img.height, patch_size), div_up(img.width, patch_size)};
}

Matrix patchify(const LabeledImage& img, std::size_t patch_size) {
    img.validate();
    auto [gy, gx] = patch_grid(img, patch_size);
    const std::size_t ps = patch_size, c_dim = img.channels;
    Matrix out(gy * gx, ps * ps * c_dim);

    for (std::size_t py = 0; py < gy; ++py) {
        for (std::size_t px = 0; px < gx; ++px) {
            auto dst = out.row(py * gx + px);
            std::size_t t = 0;
            for (std::size_t dy = 0; dy < ps; ++dy) {
                std::size_t y = reflect(py * ps + dy, img.height);
                for (std::size_t dx = 0; dx < ps; ++dx) {
                    std::size_t x = reflect(px * ps + dx, img.width);
                    const double* src = img.pixels.data() + (y * img.width + x) * c_dim;
                    for (std::size_t ch = 0; ch < c_dim; ++ch) dst[t++] = src[ch];
                }
            }
        }
    }
    return out;
}

std::vector<double> patch_positive_fractions(const LabeledImage& img, std::size_t patch_size) {
    img.validate();
    auto [gy, gx] = patch_grid(img, patch_size);
    const std::size_t ps = patch_size;
    std::vector<double> out(gy * gx, 0.0);
    const double inv = 1.0 / static_cast<double>(ps * ps);

    for (std::size_t py = 0; py < gy; ++py) {
        for (std::size_t px = 0; px < gx; ++px) {
            std::size_t pos = 0;
            for (std::size_t dy = 0; dy < ps; ++dy) {
                std::size_t y = reflect(py * ps + dy, img.height);
                for (std::size_t dx = 0; dx < ps; ++dx) {
                    std::size_t x = reflect(px * ps + dx, img.width);
                    pos += img.mask[y * img.width + x];
                }
            }
            out[py * gx + px] = static_cast<double>(pos) * inv;
        }
    }
    return out;
}

std::vector<std::uint8_t> assemble_patch_labels(const std::vector<std::uint8_t>& patch_labels,
                                                std::size_t height, std::size_t width,
                                                std::size_t patch_size) {
    if (patch_size == 0) throw ContractError("patch_size must be positive");
    const std::size_t gy = div_up(height, patch_size);
    const std::size_t gx = div_up(width, patch_size);
    if (patch_labels.size() != gy * gx)
        throw ShapeError("patch label count does not match the patch grid");

    std::vector<std::uint8_t> mask(height * width, 0);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x)
            mask[y * width + x] = patch_labels[(y / patch_size) * gx + (x / patch_size)];
    }
    return mask;
}

PixelConfusion pixel_confusion(const std::vector<std::uint8_t>& pred,
                               const std::vector<std::uint8_t>& truth) {
    if (pred.size() != truth.size()) throw ShapeError("mask sizes differ");
    if (pred.empty()) throw ContractError("pixel_confusion on empty masks");
    PixelConfusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i]) {
            if (pred[i]) ++c.tp;
            else ++c.fn;
        } else {
            if (pred[i]) ++c.fp;
            else ++c.tn;
        }
    }
    return c;
}

PixelMetrics pixel_metrics(const std::vector<std::uint8_t>& pred,
                           const std::vector<std::uint8_t>& truth) {
    PixelConfusion c = pixel_confusion(pred, truth);
    PixelMetrics m{c, 0, 0, 0, 0, 0};
    const std::size_t pos = c.tp + c.fn;
    const std::size_t neg = c.tn + c.fp;
    if (pos > 0) {
        m.tpr = static_cast<double>(c.tp) / static_cast<double>(pos);
        m.fnr = 1.0 - m.tpr;
    } else {
        m.tpr = 1.0;
        m.fnr = 0.0;
    }
    if (neg > 0) {
        m.tnr = static_cast<double>(c.tn) / static_cast<double>(neg);
        m.fpr = 1.0 - m.tnr;
    } else {
        m.tnr = 1.0;
        m.fpr = 0.0;
    }
    m.pa = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    return m;
}

namespace {

Matrix cluster_distribution(const Matrix& features, const std::vector<int>& labels, int cluster,
                            const KdeConfig& kde) {
    std::size_t count = 0;
    for (int l : labels)
        if (l == cluster) ++count;
    if (count == 0) return Matrix(0, 0);
    Matrix sub(count, features.cols());
    std::size_t r = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != cluster) continue;
        auto src = features.row(i);
        std::copy(src.begin(), src.end(), sub.row(r++).begin());
    }
    auto [dist, cache] = kde_forward(sub, kde);
    Matrix d(dist.features, dist.bins);
    d.data() = dist.values;
    return d;
}

/// Map the two cluster ids to {negative, positive} using the reference.
std::vector<std::uint8_t> anchor_labels(const Matrix& features, const std::vector<int>& labels,
                                        const KdeConfig& kde, const Matrix& positive_ref) {
    Matrix d0 = cluster_distribution(features, labels, 0, kde);
    Matrix d1 = cluster_distribution(features, labels, 1, kde);
    double dist0 = d0.size() ? l1_distance(d0, positive_ref)
                             : std::numeric_limits<double>::infinity();
    double dist1 = d1.size() ? l1_distance(d1, positive_ref)
                             : std::numeric_limits<double>::infinity();
    int positive_cluster = dist1 < dist0 ? 1 : 0;

    std::vector<std::uint8_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[i] = labels[i] == positive_cluster ? 1 : 0;
    return out;
}

ClusterAssignment run_clusterer(const Matrix& features, ClusterMethod method,
                                std::mt19937_64& rng) {
    if (method == ClusterMethod::Spectral) return spectral(features, 2, 0.5, rng);
    return kmeans(features, 2, 5, 200, 1e-10, rng);
}

}  // namespace

Matrix positive_reference(const UccModel& model, const std::vector<LabeledImage>& train_images,
                          std::size_t patch_size, const SegThresholds& t) {
    t.validate();
    std::vector<Matrix> pure;
    std::size_t rows = 0;
    for (const LabeledImage& img : train_images) {
        if (img.positive_fraction() > t.ucc1_high) {
            pure.push_back(patchify(img, patch_size));
            rows += pure.back().rows();
        }
    }
    if (rows == 0) throw ContractError("no pure-positive training images for the reference");

    Matrix all(rows, pure[0].cols());
    std::size_t r = 0;
    for (const Matrix& p : pure) {
        for (std::size_t i = 0; i < p.rows(); ++i) {
            auto src = p.row(i);
            std::copy(src.begin(), src.end(), all.row(r++).begin());
        }
    }
    Matrix features = extract_features(model, all);
    auto [dist, cache] = kde_forward(features, model.kde);
    Matrix d(dist.features, dist.bins);
    d.data() = dist.values;
    return d;
}

std::vector<std::uint8_t> segment(const UccModel& model, const LabeledImage& img,
                                  std::size_t patch_size, ClusterMethod method,
                                  const Matrix& positive_ref, std::mt19937_64& rng) {
    Matrix patches = patchify(img, patch_size);
    if (patches.cols() != model.input_dim())
        throw ShapeError("patch dimension does not match the model input");
    Matrix features = extract_features(model, patches);
    ClusterAssignment assign = run_clusterer(features, method, rng);
    std::vector<std::uint8_t> patch_labels =
        anchor_labels(features, assign.labels, model.kde, positive_ref);
    return assemble_patch_labels(patch_labels, img.height, img.width, patch_size);
}

std::vector<std::vector<std::uint8_t>> segment_pooled(const UccModel& model,
                                                      const std::vector<LabeledImage>& images,
                                                      std::size_t patch_size, ClusterMethod method,
                                                      const Matrix& positive_ref,
                                                      std::mt19937_64& rng) {
    if (images.empty()) throw ContractError("segment_pooled needs at least one image");

    std::vector<Matrix> per_image;
    std::size_t rows = 0;
    for (const LabeledImage& img : images) {
        per_image.push_back(patchify(img, patch_size));
        if (per_image.back().cols() != model.input_dim())
            throw ShapeError("patch dimension does not match the model input");
        rows += per_image.back().rows();
    }

    Matrix all(rows, per_image[0].cols());
    std::size_t r = 0;
    for (const Matrix& p : per_image) {
        for (std::size_t i = 0; i < p.rows(); ++i) {
            auto src = p.row(i);
            std::copy(src.begin(), src.end(), all.row(r++).begin());
        }
    }

    Matrix features = extract_features(model, all);
    ClusterAssignment assign = run_clusterer(features, method, rng);
    std::vector<std::uint8_t> patch_labels =
        anchor_labels(features, assign.labels, model.kde, positive_ref);

    std::vector<std::vector<std::uint8_t>> masks;
    masks.reserve(images.size());
    std::size_t offset = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::size_t n = per_image[i].rows();
        std::vector<std::uint8_t> labels(patch_labels.begin() + static_cast<std::ptrdiff_t>(offset),
                                         patch_labels.begin() + static_cast<std::ptrdiff_t>(offset + n));
        masks.push_back(assemble_patch_labels(labels, images[i].height, images[i].width, patch_size));
        offset += n;
    }
    return masks;
}

SegDataset make_seg_dataset(const std::vector<LabeledImage>& images, std::size_t patch_size,
                            const SegThresholds& t) {
    if (images.empty()) throw ContractError("make_seg_dataset needs at least one image");

    std::vector<std::size_t> kept;
    std::vector<int> bag_labels;
    std::size_t rows = 0;
    std::size_t cols = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        auto lbl = label_image(images[i], t);
        if (!lbl) continue;
        kept.push_back(i);
        bag_labels.push_back(*lbl);
        auto [gy, gx] = patch_grid(images[i], patch_size);
        rows += gy * gx;
        cols = patch_size * patch_size * images[i].channels;
    }
    if (kept.empty()) throw ContractError("all images fell into the threshold gap bands");

    SegDataset ds;
    ds.kept = kept;
    ds.pool.instances = Matrix(rows, cols);
    ds.pool.labels.assign(rows, 1);
    ds.pool.num_classes = 2;

    std::size_t r = 0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const LabeledImage& img = images[kept[k]];
        Matrix patches = patchify(img, patch_size);
        std::vector<double> fracs = patch_positive_fractions(img, patch_size);

        Bag bag;
        bag.ucc = bag_labels[k];
        for (std::size_t i = 0; i < patches.rows(); ++i) {
            auto src = patches.row(i);
            std::copy(src.begin(), src.end(), ds.pool.instances.row(r).begin());
            ds.pool.labels[r] = fracs[i] >= 0.5 ? 2 : 1;
            bag.indices.push_back(r);
            ++r;
        }
        ds.bags.push_back(std::move(bag));
    }
    return ds;
}

}  // namespace ucc
