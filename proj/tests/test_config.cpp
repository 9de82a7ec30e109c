#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ucc/config.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace ucc;
namespace fs = std::filesystem;

namespace {

std::string temp_config(const std::string& content) {
    static int counter = 0;
    fs::path p = fs::temp_directory_path() /
                 ("ucc_cfg_" + std::to_string(std::random_device{}()) + "_" +
                  std::to_string(counter++) + ".cfg");
    std::ofstream out(p);
    out << content;
    return p.string();
}

}  // namespace

TEST_CASE("defaults resolve without any input") {
    KeyValues kv;
    RunConfig c = resolve_config(kv);
    CHECK(c.model.input_dim == 8);
    CHECK(c.model.features == 8);
    CHECK(c.model.kde.bins == 11);
    CHECK(c.model.kde.bandwidth == 0.1);
    CHECK(c.model.alpha == 0.5);
    CHECK(c.model.ucc_lo == 1);
    CHECK(c.model.ucc_hi == 4);
    CHECK(c.bag_size == 16);
    CHECK(c.bags_per_label == 300);
    CHECK(c.cluster_method == "kmeans");
    CHECK(c.seg_mode == "pooled");
    CHECK(c.patch_size == 16);
    CHECK(c.seed == 1);
}

TEST_CASE("config files override defaults, with comments and blanks ignored") {
    std::string path = temp_config(
        "# run settings\n"
        "\n"
        "model.features = 6\n"
        "model.kde_bandwidth = 0.2\n"
        "  model.alpha=0.7  \n"
        "train.learning_rate = 0.05\n"
        "bags.size = 12\n"
        "cluster.method = spectral\n"
        "seed = 99\n");
    KeyValues kv;
    kv.load_file(path);
    RunConfig c = resolve_config(kv);
    fs::remove(path);

    CHECK(c.model.features == 6);
    CHECK(c.model.kde.bandwidth == 0.2);
    CHECK(c.model.alpha == 0.7);
    CHECK(c.train.learning_rate == 0.05);
    CHECK(c.bag_size == 12);
    CHECK(c.cluster_method == "spectral");
    CHECK(c.seed == 99);
    // sub-seeds inherit the master seed unless set explicitly
    CHECK(c.train.seed == 99);
    CHECK(c.synth.seed == 99);
    CHECK(c.seg_images.seed == 100);
}

TEST_CASE("set lines override file values") {
    std::string path = temp_config("model.features = 6\nseed = 5\n");
    KeyValues kv;
    kv.load_file(path);
    kv.set_line("model.features=10");
    kv.set_line("train.seed = 77");
    RunConfig c = resolve_config(kv);
    fs::remove(path);

    CHECK(c.model.features == 10);
    CHECK(c.seed == 5);
    CHECK(c.train.seed == 77);
    CHECK(c.synth.seed == 5);
}

TEST_CASE("hidden layer lists parse from comma-separated sizes") {
    KeyValues kv;
    kv.set("model.feature_hidden", "64,32");
    kv.set("model.drn_hidden", "16");
    RunConfig c = resolve_config(kv);
    CHECK(c.model.feature_hidden == std::vector<std::size_t>{64, 32});
    CHECK(c.model.drn_hidden == std::vector<std::size_t>{16});
    CHECK(c.model.decoder_hidden == std::vector<std::size_t>{32});

    KeyValues bad;
    bad.set("model.feature_hidden", "64,x");
    CHECK_THROWS_AS(resolve_config(bad), FormatError);
    KeyValues zero;
    zero.set("model.feature_hidden", "64,0");
    CHECK_THROWS_AS(resolve_config(zero), FormatError);
    KeyValues empty;
    empty.set("model.feature_hidden", "");
    CHECK_THROWS_AS(resolve_config(empty), FormatError);
}

TEST_CASE("malformed inputs are named in the error") {
    KeyValues kv;
    kv.set("model.alpha", "brick");
    CHECK_THROWS_WITH_AS(resolve_config(kv), doctest::Contains("model.alpha"), FormatError);

    KeyValues kv2;
    kv2.set("train.max_iters", "-5");
    CHECK_THROWS_AS(resolve_config(kv2), FormatError);

    KeyValues kv3;
    kv3.set("model.pooling", "median");
    CHECK_THROWS_AS(resolve_config(kv3), FormatError);

    CHECK_THROWS_AS(KeyValues{}.set_line("no equals sign"), FormatError);

    std::string path = temp_config("model.features\n");
    KeyValues kv4;
    CHECK_THROWS_WITH_AS(kv4.load_file(path), doctest::Contains(":1:"), FormatError);
    fs::remove(path);

    KeyValues kv5;
    CHECK_THROWS_AS(kv5.load_file("/nonexistent/nope.cfg"), FormatError);
}

TEST_CASE("unknown keys are rejected by name") {
    KeyValues kv;
    kv.set("model.features", "8");
    kv.set("model.fetures", "8");
    CHECK_THROWS_WITH_AS(resolve_config(kv), doctest::Contains("model.fetures"), FormatError);
}

TEST_CASE("semantic validation rejects inconsistent settings") {
    KeyValues kv;
    kv.set("model.ucc_lo", "3");
    kv.set("model.ucc_hi", "2");
    CHECK_THROWS_AS(resolve_config(kv), ContractError);

    KeyValues kv2;
    kv2.set("bags.size", "2");  // below ucc_hi=4
    CHECK_THROWS_AS(resolve_config(kv2), ContractError);

    KeyValues kv3;
    kv3.set("cluster.method", "dbscan");
    CHECK_THROWS_AS(resolve_config(kv3), ContractError);

    KeyValues kv4;
    kv4.set("model.alpha", "1.2");
    CHECK_THROWS_AS(resolve_config(kv4), ContractError);

    KeyValues kv5;
    kv5.set("seg.mode", "global");
    CHECK_THROWS_AS(resolve_config(kv5), ContractError);

    KeyValues kv6;
    kv6.set("train.val_fraction", "1.0");
    CHECK_THROWS_AS(resolve_config(kv6), ContractError);
}

TEST_CASE("dump is sorted, deterministic and reparseable") {
    KeyValues kv;
    kv.set("seed", "7");
    kv.set("model.alpha", "0.25");
    kv.set("bags.size", "10");
    std::string d = kv.dump();
    CHECK(d == "bags.size=10\nmodel.alpha=0.25\nseed=7\n");

    std::string path = temp_config(d);
    KeyValues kv2;
    kv2.load_file(path);
    CHECK(kv2.dump() == d);
    fs::remove(path);

    RunConfig a = resolve_config(kv);
    RunConfig b = resolve_config(kv2);
    CHECK(a.model.alpha == b.model.alpha);
    CHECK(a.bag_size == b.bag_size);
    CHECK(a.seed == b.seed);
}

TEST_CASE("later assignments win within one source") {
    KeyValues kv;
    kv.set_line("model.features=4");
    kv.set_line("model.features=12");
    RunConfig c = resolve_config(kv);
    CHECK(c.model.features == 12);
}
