#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ucc/segmentation.hpp"
#include "ucc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace ucc;

namespace {

LabeledImage solid_image(std::size_t h, std::size_t w, double value, std::uint8_t mask_value) {
    LabeledImage img;
    img.height = h;
    img.width = w;
    img.channels = 1;
    img.pixels.assign(h * w, value);
    img.mask.assign(h * w, mask_value);
    return img;
}

LabeledImage image_with_fraction(double frac) {
    LabeledImage img = solid_image(10, 10, 0.5, 0);
    std::size_t pos = std::size_t(std::round(frac * 100.0));
    for (std::size_t i = 0; i < pos; ++i) img.mask[i] = 1;
    return img;
}

}  // namespace

TEST_CASE("weak labels follow the threshold bands") {
    SegThresholds t;
    CHECK(label_image(image_with_fraction(0.00), t) == 1);
    CHECK(label_image(image_with_fraction(0.10), t) == 1);
    CHECK(label_image(image_with_fraction(0.90), t) == 1);
    CHECK(label_image(image_with_fraction(1.00), t) == 1);
    CHECK(label_image(image_with_fraction(0.40), t) == 2);
    CHECK(label_image(image_with_fraction(0.50), t) == 2);
    CHECK(label_image(image_with_fraction(0.60), t) == 2);
    CHECK(!label_image(image_with_fraction(0.25), t).has_value());
    CHECK(!label_image(image_with_fraction(0.75), t).has_value());
    // band edges sit in the gap: strict inequalities on both sides
    CHECK(!label_image(image_with_fraction(0.20), t).has_value());
    CHECK(!label_image(image_with_fraction(0.30), t).has_value());
    CHECK(!label_image(image_with_fraction(0.70), t).has_value());
    CHECK(!label_image(image_with_fraction(0.80), t).has_value());
}

TEST_CASE("threshold validation enforces the band ordering") {
    SegThresholds t;
    t.ucc2_low = 0.1;  // now ucc1_low > ucc2_low
    CHECK_THROWS_AS(t.validate(), ContractError);
    SegThresholds t2;
    t2.ucc1_high = 1.5;
    CHECK_THROWS_AS(t2.validate(), ContractError);
}

TEST_CASE("patch grids count padded tiles") {
    LabeledImage a = solid_image(64, 64, 0.0, 0);
    CHECK(patch_grid(a, 32) == std::pair<std::size_t, std::size_t>{2, 2});
    CHECK(patchify(a, 32).rows() == 4);

    LabeledImage b = solid_image(128, 128, 0.0, 0);
    CHECK(patch_grid(b, 16) == std::pair<std::size_t, std::size_t>{8, 8});
    CHECK(patchify(b, 16).rows() == 64);

    LabeledImage c = solid_image(100, 70, 0.0, 0);
    CHECK(patch_grid(c, 32) == std::pair<std::size_t, std::size_t>{4, 3});
    CHECK(patchify(c, 32).rows() == 12);
    CHECK(patchify(c, 32).cols() == 32 * 32);
}

TEST_CASE("patchify tiles divisible images losslessly") {
    LabeledImage img = solid_image(6, 4, 0.0, 0);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = double(i);
    Matrix patches = patchify(img, 2);
    REQUIRE(patches.rows() == 6);
    REQUIRE(patches.cols() == 4);

    // reassemble by inverting the row-major tiling
    std::vector<double> rebuilt(img.pixels.size(), -1.0);
    auto [gy, gx] = patch_grid(img, 2);
    for (std::size_t py = 0; py < gy; ++py)
        for (std::size_t px = 0; px < gx; ++px) {
            auto row = patches.row(py * gx + px);
            for (std::size_t dy = 0; dy < 2; ++dy)
                for (std::size_t dx = 0; dx < 2; ++dx)
                    rebuilt[(py * 2 + dy) * img.width + (px * 2 + dx)] = row[dy * 2 + dx];
        }
    CHECK(rebuilt == img.pixels);
}

TEST_CASE("padding reflects without repeating the border pixel") {
    LabeledImage img = solid_image(3, 3, 0.0, 0);
    // pixel value encodes its coordinates
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) img.pixels[y * 3 + x] = double(10 * y + x);

    Matrix patches = patchify(img, 2);
    REQUIRE(patches.rows() == 4);

    // patch (1,1) covers coordinates {2,3} x {2,3}; 3 reflects onto 1
    auto p = patches.row(3);
    CHECK(p[0] == 22.0);
    CHECK(p[1] == 21.0);
    CHECK(p[2] == 12.0);
    CHECK(p[3] == 11.0);
}

TEST_CASE("patch positive fractions count mask pixels per tile") {
    LabeledImage img = solid_image(4, 4, 0.0, 0);
    // top-left 2x2 tile fully positive, top-right tile half positive
    img.mask[0] = img.mask[1] = img.mask[4] = img.mask[5] = 1;
    img.mask[2] = img.mask[6] = 1;
    std::vector<double> fracs = patch_positive_fractions(img, 2);
    REQUIRE(fracs.size() == 4);
    CHECK(fracs[0] == 1.0);
    CHECK(fracs[1] == 0.5);
    CHECK(fracs[2] == 0.0);
    CHECK(fracs[3] == 0.0);
}

TEST_CASE("assemble_patch_labels paints tiles and crops padding") {
    std::vector<std::uint8_t> labels{1, 0, 0, 1};
    std::vector<std::uint8_t> mask = assemble_patch_labels(labels, 4, 4, 2);
    REQUIRE(mask.size() == 16);
    std::vector<std::uint8_t> expect{1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1};
    CHECK(mask == expect);

    // 3x3 with the same 2x2 patch grid: padding cropped away
    std::vector<std::uint8_t> small = assemble_patch_labels(labels, 3, 3, 2);
    REQUIRE(small.size() == 9);
    std::vector<std::uint8_t> expect_small{1, 1, 0, 1, 1, 0, 0, 0, 1};
    CHECK(small == expect_small);

    CHECK_THROWS_AS(assemble_patch_labels({1, 0}, 4, 4, 2), ShapeError);
}

TEST_CASE("pixel confusion against a hand count") {
    std::vector<std::uint8_t> truth{1, 1, 1, 0, 0, 0, 1, 0};
    std::vector<std::uint8_t> pred{1, 1, 0, 0, 1, 0, 0, 1};
    PixelConfusion c = pixel_confusion(pred, truth);
    CHECK(c.tp == 2);
    CHECK(c.fn == 2);
    CHECK(c.fp == 2);
    CHECK(c.tn == 2);
    CHECK(c.total() == 8);

    PixelMetrics m = pixel_metrics(pred, truth);
    CHECK(m.tpr == doctest::Approx(0.5));
    CHECK(m.tnr == doctest::Approx(0.5));
    CHECK(m.pa == doctest::Approx(0.5));
    CHECK(m.fnr == 1.0 - m.tpr);
    CHECK(m.fpr == 1.0 - m.tnr);

    CHECK_THROWS_AS(pixel_confusion(pred, {1, 0}), ShapeError);
    CHECK_THROWS_AS(pixel_confusion({}, {}), ContractError);
}

TEST_CASE("perfect and inverted predictions bracket the metrics") {
    std::vector<std::uint8_t> truth{1, 0, 1, 0, 1, 1};
    PixelMetrics good = pixel_metrics(truth, truth);
    CHECK(good.pa == 1.0);
    CHECK(good.tpr == 1.0);
    CHECK(good.tnr == 1.0);
    CHECK(good.fpr == 0.0);
    CHECK(good.fnr == 0.0);

    std::vector<std::uint8_t> inverted;
    for (std::uint8_t v : truth) inverted.push_back(v ? 0 : 1);
    PixelMetrics bad = pixel_metrics(inverted, truth);
    CHECK(bad.pa == 0.0);
    CHECK(bad.tpr == 0.0);
    CHECK(bad.fnr == 1.0);
}

TEST_CASE("single-class truths use the zero-denominator fallbacks") {
    std::vector<std::uint8_t> all_neg(6, 0);
    std::vector<std::uint8_t> pred{0, 1, 0, 0, 1, 0};
    PixelMetrics m = pixel_metrics(pred, all_neg);
    CHECK(m.tpr == 1.0);
    CHECK(m.fnr == 0.0);
    CHECK(m.tnr == doctest::Approx(4.0 / 6.0));
    CHECK(m.fpr == 1.0 - m.tnr);

    std::vector<std::uint8_t> all_pos(6, 1);
    PixelMetrics m2 = pixel_metrics(pred, all_pos);
    CHECK(m2.tnr == 1.0);
    CHECK(m2.fpr == 0.0);
    CHECK(m2.tpr == doctest::Approx(2.0 / 6.0));
    CHECK(m2.fnr == 1.0 - m2.tpr);
}

TEST_CASE("image validation rejects malformed buffers") {
    LabeledImage img = solid_image(4, 4, 0.2, 0);
    img.validate();

    LabeledImage bad = img;
    bad.pixels.pop_back();
    CHECK_THROWS_AS(bad.validate(), ShapeError);

    bad = img;
    bad.mask[3] = 2;
    CHECK_THROWS_AS(bad.validate(), ContractError);

    bad = img;
    bad.pixels[0] = std::nan("");
    CHECK_THROWS_AS(bad.validate(), NumericError);
}

TEST_CASE("make_seg_dataset keeps labelable images and tags patches by mask majority") {
    std::vector<LabeledImage> images;
    images.push_back(solid_image(4, 4, 0.3, 0));   // pure negative, ucc1
    images.push_back(solid_image(4, 4, 0.7, 1));   // pure positive, ucc1
    LabeledImage half = solid_image(4, 4, 0.3, 0);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 2; x < 4; ++x) {
            half.mask[y * 4 + x] = 1;
            half.pixels[y * 4 + x] = 0.7;
        }
    images.push_back(half);                        // 50/50, ucc2
    LabeledImage gap = solid_image(4, 4, 0.3, 0);
    for (std::size_t i = 0; i < 4; ++i) gap.mask[i] = 1;  // 25%, in the gap band
    images.push_back(gap);

    SegThresholds t;
    SegDataset ds = make_seg_dataset(images, 2, t);

    REQUIRE(ds.kept == std::vector<std::size_t>{0, 1, 2});
    REQUIRE(ds.bags.size() == 3);
    CHECK(ds.bags[0].ucc == 1);
    CHECK(ds.bags[1].ucc == 1);
    CHECK(ds.bags[2].ucc == 2);

    // 3 kept images, 4 patches each
    CHECK(ds.pool.size() == 12);
    CHECK(ds.pool.dim() == 4);
    for (const Bag& b : ds.bags) CHECK(b.indices.size() == 4);

    // patch diagnostics labels: image 0 all negative, image 1 all positive
    for (std::size_t i : ds.bags[0].indices) CHECK(ds.pool.labels[i] == 1);
    for (std::size_t i : ds.bags[1].indices) CHECK(ds.pool.labels[i] == 2);
    // the mixed image splits its four 2x2 patches down the middle
    int pos = 0;
    for (std::size_t i : ds.bags[2].indices) pos += ds.pool.labels[i] == 2 ? 1 : 0;
    CHECK(pos == 2);

    MilDataset mil = ds.dataset();
    CHECK(mil.size() == 3);
    CHECK(mil.pool == &ds.pool);
}

TEST_CASE("segmentation pipeline produces binary masks of the right shape") {
    SegImageSpec ispec;
    ispec.count = 8;
    ispec.height = 16;
    ispec.width = 16;
    ispec.seed = 71;
    std::vector<LabeledImage> images = gen_seg_images(ispec);
    REQUIRE(images.size() == 8);
    for (const auto& img : images) img.validate();

    ModelSpec mspec;
    mspec.input_dim = 16;  // 4x4 patches
    mspec.features = 2;
    mspec.feature_hidden = {8};
    mspec.drn_hidden = {8};
    mspec.decoder_hidden = {8};
    mspec.kde.bins = 5;
    mspec.ucc_lo = 1;
    mspec.ucc_hi = 2;
    std::mt19937_64 rng(71);
    UccModel model = make_ucc_model(mspec, rng);

    SegThresholds t;
    Matrix ref = positive_reference(model, images, 4, t);
    CHECK(ref.rows() == 2);
    CHECK(ref.cols() == 5);
    for (std::size_t j = 0; j < ref.rows(); ++j) {
        double s = 0.0;
        for (std::size_t b = 0; b < ref.cols(); ++b) s += ref(j, b);
        CHECK(std::abs(s - 1.0) < 1e-9);
    }

    std::vector<std::uint8_t> mask = segment(model, images[0], 4, ClusterMethod::Kmeans, ref, rng);
    REQUIRE(mask.size() == 16 * 16);
    for (std::uint8_t v : mask) CHECK(v <= 1);

    auto masks = segment_pooled(model, images, 4, ClusterMethod::Kmeans, ref, rng);
    REQUIRE(masks.size() == images.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        REQUIRE(masks[i].size() == images[i].height * images[i].width);
        for (std::uint8_t v : masks[i]) CHECK(v <= 1);
    }

    LabeledImage wrong = solid_image(16, 16, 0.5, 0);
    std::mt19937_64 rng2(72);
    CHECK_THROWS_AS(segment(model, wrong, 8, ClusterMethod::Kmeans, ref, rng2), ShapeError);
}
