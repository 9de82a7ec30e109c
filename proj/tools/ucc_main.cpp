#include "ucc/cluster.hpp"
#include "ucc/config.hpp"
#include "ucc/errors.hpp"
#include "ucc/io.hpp"
#include "ucc/model.hpp"
#include "ucc/oracle.hpp"
#include "ucc/segmentation.hpp"
#include "ucc/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

namespace fs = std::filesystem;
using namespace ucc;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

RunConfig resolve(const GlobalArgs& g) {
    KeyValues kv;
    if (!g.config_path.empty()) kv.load_file(g.config_path);
    for (const std::string& s : g.sets) kv.set_line(s);
    if (g.seed_given) kv.set("seed", std::to_string(g.seed));
    return resolve_config(kv);
}

void write_snapshot(const RunConfig& c, const std::string& out_dir) {
    std::ostringstream s;
    s << "bags.per_label=" << c.bags_per_label << "\n";
    s << "bags.size=" << c.bag_size << "\n";
    s << "cluster.method=" << c.cluster_method << "\n";
    s << "cluster.restarts=" << c.cluster_restarts << "\n";
    s << "cluster.spectral_scale=" << c.spectral_scale << "\n";
    s << "model.alpha=" << c.model.alpha << "\n";
    s << "model.features=" << c.model.features << "\n";
    s << "model.input_dim=" << c.model.input_dim << "\n";
    s << "model.kde_bandwidth=" << c.model.kde.bandwidth << "\n";
    s << "model.kde_bins=" << c.model.kde.bins << "\n";
    s << "model.pooling=" << (c.model.pooling == Pooling::Kde ? "kde" : "mean") << "\n";
    s << "model.ucc_hi=" << c.model.ucc_hi << "\n";
    s << "model.ucc_lo=" << c.model.ucc_lo << "\n";
    s << "seed=" << c.seed << "\n";
    s << "seg.mode=" << c.seg_mode << "\n";
    s << "seg.patch_size=" << c.patch_size << "\n";
    s << "synth.classes=" << c.synth.num_classes << "\n";
    s << "synth.dim=" << c.synth.dim << "\n";
    s << "synth.per_class=" << c.synth.per_class << "\n";
    s << "synth.scale=" << c.synth.scale << "\n";
    s << "synth.separation=" << c.synth.separation << "\n";
    s << "train.batch_size=" << c.train.batch_size << "\n";
    s << "train.learning_rate=" << c.train.learning_rate << "\n";
    s << "train.max_iters=" << c.train.max_iters << "\n";
    s << "train.patience=" << c.train.patience << "\n";
    s << "train.val_period=" << c.train.val_period << "\n";
    atomic_write_file(out_dir + "/config_snapshot.txt", std::move(s).str());
}

void ensure_out(const std::string& dir) { fs::create_directories(dir); }

std::vector<LabeledImage> load_image_dir(const std::string& dir) {
    std::vector<std::string> stems;
    if (!fs::is_directory(dir)) throw FormatError("image directory not found: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".ucci") stems.push_back(e.path().stem().string());
    }
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) throw FormatError("no .ucci images in " + dir);
    std::vector<LabeledImage> images;
    images.reserve(stems.size());
    for (const std::string& s : stems)
        images.push_back(load_image(dir + "/" + s + ".ucci", dir + "/" + s + ".ucck"));
    return images;
}

std::string format_report(const TrainReport& rep, double final_acc) {
    std::ostringstream s;
    s << "iter train_loss val_loss val_acc\n";
    char line[160];
    for (const auto& e : rep.history) {
        std::snprintf(line, sizeof line, "%zu %.6f %.6f %.4f\n", e.iter, e.train_loss, e.val_loss,
                      e.val_acc);
        s << line;
    }
    s << "best_iter " << rep.best_iter << "\n";
    std::snprintf(line, sizeof line, "best_val_loss %.6f\n", rep.best_val_loss);
    s << line;
    s << "stopped_at " << rep.stopped_at << "\n";
    std::snprintf(line, sizeof line, "final_val_acc %.4f\n", final_acc);
    s << line;
    return std::move(s).str();
}

/// Random bag split for image-level datasets (no class stratification).
std::pair<std::vector<Bag>, std::vector<Bag>> split_bags(std::vector<Bag> bags, double val_fraction,
                                                         std::mt19937_64& rng) {
    if (bags.size() < 2) throw ContractError("need at least two bags to split train/val");
    std::shuffle(bags.begin(), bags.end(), rng);
    std::size_t n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(val_fraction * static_cast<double>(bags.size())), 1,
        bags.size() - 1);
    std::vector<Bag> val(bags.begin(), bags.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<Bag> train(bags.begin() + static_cast<std::ptrdiff_t>(n_val), bags.end());
    return {std::move(train), std::move(val)};
}

int cmd_train(const GlobalArgs& g, const std::string& pool_path, const std::string& images_dir) {
    RunConfig c = resolve(g);
    ensure_out(g.out_dir);
    std::mt19937_64 rng(c.seed);

    UccModel best;
    TrainReport rep;
    double final_acc = 0.0;

    if (!images_dir.empty()) {
        std::vector<LabeledImage> images = load_image_dir(images_dir);
        SegDataset sd = make_seg_dataset(images, c.patch_size, c.thresholds);
        c.model.input_dim = sd.pool.dim();
        auto [train_bags, val_bags] = split_bags(sd.bags, c.val_fraction, rng);
        MilDataset train_ds{&sd.pool, std::move(train_bags)};
        MilDataset val_ds{&sd.pool, std::move(val_bags)};

        UccModel model = make_ucc_model(c.model, rng);
        std::tie(best, rep) = train(model, train_ds, val_ds, c.train);
        auto [loss, acc] = evaluate(best, val_ds);
        final_acc = acc;
    } else {
        InstancePool pool = load_pool(pool_path);
        c.model.input_dim = pool.dim();
        auto [train_pool, val_pool] = split_pool(pool, c.val_fraction, rng);
        MilDataset train_ds = make_mil_dataset(train_pool, c.model.ucc_lo, c.model.ucc_hi,
                                               c.bags_per_label,
                                               static_cast<std::size_t>(c.bag_size), rng);
        std::size_t val_bags = std::max<std::size_t>(1, c.bags_per_label / 4);
        MilDataset val_ds = make_mil_dataset(val_pool, c.model.ucc_lo, c.model.ucc_hi, val_bags,
                                             static_cast<std::size_t>(c.bag_size), rng);

        UccModel model = make_ucc_model(c.model, rng);
        std::tie(best, rep) = train(model, train_ds, val_ds, c.train);
        auto [loss, acc] = evaluate(best, val_ds);
        final_acc = acc;
    }

    save_checkpoint(best, g.out_dir + "/checkpoint.uccm");
    atomic_write_file(g.out_dir + "/train_report.txt", format_report(rep, final_acc));
    write_snapshot(c, g.out_dir);
    std::printf("trained: best_iter=%zu best_val_loss=%.6f val_acc=%.4f\n", rep.best_iter,
                rep.best_val_loss, final_acc);
    return 0;
}

int cmd_cluster(const GlobalArgs& g, const std::string& ckpt_path, const std::string& pool_path,
                std::size_t k_override) {
    RunConfig c = resolve(g);
    ensure_out(g.out_dir);
    UccModel model = load_checkpoint(ckpt_path);
    InstancePool pool = load_pool(pool_path);
    if (pool.dim() != model.input_dim())
        throw ShapeError("pool dimension does not match the checkpoint input dimension");

    std::size_t k = k_override;
    if (k == 0) {
        if (!pool.labeled()) throw ContractError("unlabeled pool needs an explicit --k");
        k = static_cast<std::size_t>(pool.num_classes);
    }

    std::mt19937_64 rng(c.seed);
    Matrix features = extract_features(model, pool.instances);
    ClusterAssignment assign =
        c.cluster_method == "spectral"
            ? spectral(features, k, c.spectral_scale, rng)
            : kmeans(features, k, c.cluster_restarts, 300, 1e-10, rng);

    std::ostringstream alines;
    for (int l : assign.labels) alines << l << "\n";
    atomic_write_file(g.out_dir + "/assignments.txt", std::move(alines).str());

    std::ostringstream m;
    char line[160];
    std::snprintf(line, sizeof line, "inertia %.6f\n", assign.inertia);
    m << "method " << c.cluster_method << "\nk " << k << "\n" << line;

    if (pool.labeled()) {
        double acc = clustering_accuracy(pool.labels, assign.labels);
        std::snprintf(line, sizeof line, "clustering_accuracy %.4f\n", acc);
        m << line;

        FeatureMap fmap = [&](const Matrix& x) { return extract_features(model, x); };
        auto dists = pure_class_distributions(pool, model.kde, fmap);
        JsMatrix js = interclass_js(dists);
        std::snprintf(line, sizeof line, "min_interclass_js %.6f\n", js.min_off_diagonal);
        m << line;
        m << "js_matrix " << dists.size() << "\n";
        for (std::size_t a = 0; a < dists.size(); ++a) {
            for (std::size_t b = 0; b < dists.size(); ++b) {
                std::snprintf(line, sizeof line, "%.6f%c", js.values(a, b),
                              b + 1 == dists.size() ? '\n' : ' ');
                m << line;
            }
        }
        std::printf("clustering_accuracy %.4f min_js %.6f\n", acc, js.min_off_diagonal);
    } else {
        std::printf("clustered %zu points into %zu groups\n", features.rows(), k);
    }
    atomic_write_file(g.out_dir + "/cluster_metrics.txt", std::move(m).str());
    write_snapshot(c, g.out_dir);
    return 0;
}

int cmd_eval_ucc(const GlobalArgs& g, const std::string& ckpt_path, const std::string& pool_path,
                 std::size_t bags_per_label, int bag_size) {
    RunConfig c = resolve(g);
    ensure_out(g.out_dir);
    UccModel model = load_checkpoint(ckpt_path);
    InstancePool pool = load_pool(pool_path);
    if (pool.dim() != model.input_dim())
        throw ShapeError("pool dimension does not match the checkpoint input dimension");
    if (!pool.labeled()) throw ContractError("eval-ucc needs a labeled pool");
    if (model.ucc_hi > pool.num_classes)
        throw ContractError("model ucc range exceeds the pool class count");

    if (bags_per_label == 0) bags_per_label = 100;
    if (bag_size == 0) bag_size = c.bag_size;

    std::mt19937_64 rng(c.seed);
    const int n_labels = model.num_labels();
    Matrix confusion(static_cast<std::size_t>(n_labels), static_cast<std::size_t>(n_labels));
    std::size_t correct = 0, total = 0;

    for (int label = model.ucc_lo; label <= model.ucc_hi; ++label) {
        for (std::size_t t = 0; t < bags_per_label; ++t) {
            Bag bag = sample_bag(pool, label, static_cast<std::size_t>(bag_size), rng);
            int pred = predict_ucc_label(model, bag_features(pool, bag));
            confusion(static_cast<std::size_t>(label - model.ucc_lo),
                      static_cast<std::size_t>(pred - model.ucc_lo)) += 1.0;
            if (pred == label) ++correct;
            ++total;
        }
    }
    double acc = static_cast<double>(correct) / static_cast<double>(total);

    std::ostringstream s;
    char line[160];
    std::snprintf(line, sizeof line, "ucc_accuracy %.4f\n", acc);
    s << line << "bags_per_label " << bags_per_label << "\nbag_size " << bag_size << "\n";
    s << "confusion " << n_labels << "\n";
    for (int a = 0; a < n_labels; ++a) {
        for (int b = 0; b < n_labels; ++b) {
            std::snprintf(line, sizeof line, "%.0f%c",
                          confusion(static_cast<std::size_t>(a), static_cast<std::size_t>(b)),
                          b + 1 == n_labels ? '\n' : ' ');
            s << line;
        }
    }
    atomic_write_file(g.out_dir + "/eval_ucc.txt", std::move(s).str());
    write_snapshot(c, g.out_dir);
    std::printf("ucc_accuracy %.4f\n", acc);
    return 0;
}

int cmd_eval_seg(const GlobalArgs& g, const std::string& ckpt_path, const std::string& train_dir,
                 const std::string& test_dir) {
    RunConfig c = resolve(g);
    ensure_out(g.out_dir);
    UccModel model = load_checkpoint(ckpt_path);
    std::vector<LabeledImage> train_images = load_image_dir(train_dir);
    std::vector<LabeledImage> test_images = load_image_dir(test_dir);

    Matrix ref = positive_reference(model, train_images, c.patch_size, c.thresholds);
    ClusterMethod method =
        c.cluster_method == "spectral" ? ClusterMethod::Spectral : ClusterMethod::Kmeans;
    std::mt19937_64 rng(c.seed);

    std::vector<std::vector<std::uint8_t>> masks;
    if (c.seg_mode == "pooled") {
        masks = segment_pooled(model, test_images, c.patch_size, method, ref, rng);
    } else {
        for (const LabeledImage& img : test_images)
            masks.push_back(segment(model, img, c.patch_size, method, ref, rng));
    }

    std::ostringstream s;
    s << "image tpr fpr tnr fnr pa\n";
    char line[200];
    double mean_pa = 0, mean_tpr = 0, mean_fpr = 0, mean_tnr = 0, mean_fnr = 0;
    for (std::size_t i = 0; i < test_images.size(); ++i) {
        PixelMetrics pm = pixel_metrics(masks[i], test_images[i].mask);
        std::snprintf(line, sizeof line, "%zu %.4f %.4f %.4f %.4f %.4f\n", i, pm.tpr, pm.fpr,
                      pm.tnr, pm.fnr, pm.pa);
        s << line;
        mean_pa += pm.pa;
        mean_tpr += pm.tpr;
        mean_fpr += pm.fpr;
        mean_tnr += pm.tnr;
        mean_fnr += pm.fnr;
    }
    const double inv = 1.0 / static_cast<double>(test_images.size());
    std::snprintf(line, sizeof line, "mean %.4f %.4f %.4f %.4f %.4f\n", mean_tpr * inv,
                  mean_fpr * inv, mean_tnr * inv, mean_fnr * inv, mean_pa * inv);
    s << line;
    atomic_write_file(g.out_dir + "/eval_seg.txt", std::move(s).str());
    write_snapshot(c, g.out_dir);
    std::printf("mean_pixel_accuracy %.4f over %zu images\n", mean_pa * inv, test_images.size());
    return 0;
}

int cmd_verify_props(const GlobalArgs& g, const std::string& pool_path,
                     const std::string& ckpt_path, std::size_t trials) {
    RunConfig c = resolve(g);
    ensure_out(g.out_dir);

    InstancePool pool = pool_path.empty() ? gen_synthetic_pool(c.synth) : load_pool(pool_path);
    if (!pool.labeled()) throw ContractError("verify-props needs a labeled pool");

    UccModel model;
    bool have_model = !ckpt_path.empty();
    if (have_model) {
        model = load_checkpoint(ckpt_path);
        if (pool.dim() != model.input_dim())
            throw ShapeError("pool dimension does not match the checkpoint input dimension");
    }
    FeatureMap fmap = have_model
                          ? FeatureMap([&](const Matrix& x) { return extract_features(model, x); })
                          : FeatureMap([](const Matrix& x) { return x; });

    std::mt19937_64 rng(c.seed);
    std::ostringstream s;
    bool all_pass = true;
    char line[240];

    // constructive clustering from the perfect oracle
    {
        UccOracle oracle(pool);
        std::vector<std::size_t> universe(std::min<std::size_t>(pool.size(), 200));
        if (universe.size() < pool.size()) {
            std::vector<std::size_t> all(pool.size());
            std::iota(all.begin(), all.end(), 0);
            std::shuffle(all.begin(), all.end(), rng);
            std::copy(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(universe.size()),
                      universe.begin());
        } else {
            std::iota(universe.begin(), universe.end(), 0);
        }
        Partition part = cluster_by_ucc(universe, oracle, rng);
        std::vector<int> truth;
        truth.reserve(universe.size());
        for (std::size_t idx : universe) truth.push_back(pool.labels[idx]);
        double acc = clustering_accuracy(truth, part.labels_for(universe));
        int classes_present = ucc_of(pool, universe);
        bool pass = part.num_blocks() == static_cast<std::size_t>(classes_present) && acc == 1.0;
        all_pass = all_pass && pass;
        std::snprintf(line, sizeof line, "prop2 %s blocks=%zu classes=%d accuracy=%.4f\n",
                      pass ? "PASS" : "FAIL", part.num_blocks(), classes_present, acc);
        s << line;
    }

    PropReport r1 = check_prop1(pool, c.model.kde, fmap, trials, rng);
    all_pass = all_pass && r1.passed;
    std::snprintf(line, sizeof line, "prop1 %s trials=%zu violations=%zu min_l1=%.6g\n",
                  r1.passed ? "PASS" : "FAIL", r1.trials, r1.violations, r1.stat);
    s << line;

    PropReport r3 = check_prop3(pool, c.model.kde, fmap);
    all_pass = all_pass && r3.passed;
    std::snprintf(line, sizeof line, "prop3 %s pairs=%zu violations=%zu min_l1=%.6g\n",
                  r3.passed ? "PASS" : "FAIL", r3.trials, r3.violations, r3.stat);
    s << line;

    PropReport rb1 = check_propB1(pool, trials, rng);
    all_pass = all_pass && rb1.passed;
    std::snprintf(line, sizeof line, "propB1 %s trials=%zu violations=%zu\n",
                  rb1.passed ? "PASS" : "FAIL", rb1.trials, rb1.violations);
    s << line;

    PropReport rb3 = check_propB3(pool, c.model.kde, trials, rng, have_model ? &model : nullptr);
    all_pass = all_pass && rb3.passed;
    std::snprintf(line, sizeof line, "propB3 %s trials=%zu violations=%zu max_dev=%.3g\n",
                  rb3.passed ? "PASS" : "FAIL", rb3.trials, rb3.violations, rb3.stat);
    s << line;

    std::string text = std::move(s).str();
    atomic_write_file(g.out_dir + "/verify_props.txt", text);
    std::fputs(text.c_str(), stdout);
    if (!all_pass) throw NumericError("proposition verification failed");
    return 0;
}

int cmd_gen_data(const GlobalArgs& g, bool with_images) {
    RunConfig c = resolve(g);
    ensure_out(g.out_dir);

    InstancePool pool = gen_synthetic_pool(c.synth);
    save_pool(pool, g.out_dir + "/pool.txt");
    std::printf("pool: %zu instances, dim %zu, %d classes\n", pool.size(), pool.dim(),
                pool.num_classes);

    if (with_images) {
        char name[64];
        SegImageSpec train_spec = c.seg_images;
        SegImageSpec test_spec = c.seg_images;
        test_spec.seed = train_spec.seed + 9999;
        for (const auto& [dir, spec] :
             {std::pair<std::string, SegImageSpec>{"images-train", train_spec},
              std::pair<std::string, SegImageSpec>{"images-test", test_spec}}) {
            ensure_out(g.out_dir + "/" + dir);
            std::vector<LabeledImage> images = gen_seg_images(spec);
            for (std::size_t i = 0; i < images.size(); ++i) {
                std::snprintf(name, sizeof name, "%s/%s/%04zu", g.out_dir.c_str(), dir.c_str(), i);
                save_image(images[i], std::string(name) + ".ucci", std::string(name) + ".ucck");
            }
            std::printf("%s: %zu images %zux%zu\n", dir.c_str(), images.size(), spec.height,
                        spec.width);
        }
    }
    write_snapshot(c, g.out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unique-class-count weakly supervised clustering"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    app.add_option("--config", g.config_path, "key=value config file");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--set", g.sets, "config override key=value (repeatable)");
    auto* seed_opt = app.add_option("--seed", g.seed, "master RNG seed");

    std::string pool_path, images_dir, ckpt_path, train_dir, test_dir;
    std::size_t k_override = 0, bags_per_label = 0, trials = 200;
    int bag_size = 0;
    bool with_images = false;

    auto* c_train = app.add_subcommand("train", "train a model on a pool or an image directory");
    c_train->add_option("--pool", pool_path, "pool file");
    c_train->add_option("--images", images_dir, "labeled image directory (.ucci/.ucck pairs)");

    auto* c_cluster = app.add_subcommand("cluster", "cluster pool instances by extracted features");
    c_cluster->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    c_cluster->add_option("--pool", pool_path, "pool file")->required();
    c_cluster->add_option("--k", k_override, "cluster count (default: pool classes)");

    auto* c_eval = app.add_subcommand("eval-ucc", "bag-level ucc accuracy and confusion matrix");
    c_eval->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    c_eval->add_option("--pool", pool_path, "pool file")->required();
    c_eval->add_option("--bags-per-label", bags_per_label, "bags sampled per ucc label");
    c_eval->add_option("--bag-size", bag_size, "instances per bag");

    auto* c_seg = app.add_subcommand("eval-seg", "segment test images and report pixel metrics");
    c_seg->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    c_seg->add_option("--train-images", train_dir, "training image directory (for the reference)")
        ->required();
    c_seg->add_option("--images", test_dir, "test image directory")->required();

    auto* c_props = app.add_subcommand("verify-props", "run the proposition checks");
    c_props->add_option("--pool", pool_path, "pool file (default: synthetic)");
    c_props->add_option("--checkpoint", ckpt_path, "optional trained model");
    c_props->add_option("--trials", trials, "trials per randomized check");

    auto* c_gen = app.add_subcommand("gen-data", "generate a synthetic pool (and images)");
    c_gen->add_flag("--images", with_images, "also write segmentation image sets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        if (c_train->parsed()) {
            if (pool_path.empty() == images_dir.empty())
                throw ContractError("train needs exactly one of --pool or --images");
            return cmd_train(g, pool_path, images_dir);
        }
        if (c_cluster->parsed()) return cmd_cluster(g, ckpt_path, pool_path, k_override);
        if (c_eval->parsed()) return cmd_eval_ucc(g, ckpt_path, pool_path, bags_per_label, bag_size);
        if (c_seg->parsed()) return cmd_eval_seg(g, ckpt_path, train_dir, test_dir);
        if (c_props->parsed()) return cmd_verify_props(g, pool_path, ckpt_path, trials);
        if (c_gen->parsed()) return cmd_gen_data(g, with_images);
    } catch (const TrainingDiverged& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const EmptyBagError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
