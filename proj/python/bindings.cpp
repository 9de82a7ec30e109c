#include "ucc/cluster.hpp"
#include "ucc/io.hpp"
#include "ucc/kde.hpp"
#include "ucc/model.hpp"
#include "ucc/oracle.hpp"
#include "ucc/synthetic.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ucc;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw ShapeError("expected a 2-D array");
    Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + m.size(), m.data().begin());
    return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
    py::array_t<double> arr({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), arr.mutable_data());
    return arr;
}

InstancePool to_pool(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                     const std::vector<int>& labels, int num_classes) {
    InstancePool pool;
    pool.instances = to_matrix(x);
    pool.labels = labels;
    pool.num_classes = num_classes;
    pool.validate();
    return pool;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "unique-class-count weakly supervised clustering core";

    py::register_exception<ShapeError>(m, "ShapeError");
    py::register_exception<ContractError>(m, "ContractError");
    py::register_exception<EmptyBagError>(m, "EmptyBagError");
    py::register_exception<FormatError>(m, "FormatError");
    py::register_exception<NumericError>(m, "NumericError");

    py::class_<KdeConfig>(m, "KdeConfig")
        .def(py::init<>())
        .def_readwrite("bins", &KdeConfig::bins)
        .def_readwrite("bandwidth", &KdeConfig::bandwidth)
        .def_readwrite("range_lo", &KdeConfig::range_lo)
        .def_readwrite("range_hi", &KdeConfig::range_hi);

    m.def(
        "kde_pool",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
           const KdeConfig& cfg) {
            auto [dist, cache] = kde_forward(to_matrix(features), cfg);
            Matrix d(dist.features, dist.bins);
            d.data() = dist.values;
            return from_matrix(d);
        },
        py::arg("features"), py::arg("config") = KdeConfig(),
        "Per-feature KDE histograms of a bag's feature rows, shape [J, bins].");

    m.def(
        "kde_pool_backward",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& upstream,
           const KdeConfig& cfg) {
            auto [dist, cache] = kde_forward(to_matrix(features), cfg);
            return from_matrix(kde_backward(cache, cfg, to_matrix(upstream)));
        },
        py::arg("features"), py::arg("upstream"), py::arg("config") = KdeConfig(),
        "Gradient of sum(upstream * kde_pool(features)) with respect to features.");

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("max_iters", &TrainConfig::max_iters)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("val_period", &TrainConfig::val_period)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<UccModel>(m, "UccModel")
        .def_property_readonly("alpha", [](const UccModel& mod) { return mod.alpha; })
        .def_property_readonly("ucc_lo", [](const UccModel& mod) { return mod.ucc_lo; })
        .def_property_readonly("ucc_hi", [](const UccModel& mod) { return mod.ucc_hi; })
        .def_property_readonly("input_dim", [](const UccModel& mod) { return mod.input_dim(); })
        .def_property_readonly("feature_dim", [](const UccModel& mod) { return mod.feature_dim(); })
        .def("predict_ucc",
             [](const UccModel& mod,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& bag) {
                 return predict_ucc(mod, to_matrix(bag));
             },
             py::arg("bag"), "Softmax over the ucc label range for one bag of instances.")
        .def("predict_ucc_label",
             [](const UccModel& mod,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& bag) {
                 return predict_ucc_label(mod, to_matrix(bag));
             },
             py::arg("bag"))
        .def("extract_features",
             [](const UccModel& mod,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& instances) {
                 return from_matrix(extract_features(mod, to_matrix(instances)));
             },
             py::arg("instances"), "Per-instance sigmoid features, shape [n, J].")
        .def("reconstruct",
             [](const UccModel& mod,
                const py::array_t<double, py::array::c_style | py::array::forcecast>& instances) {
                 return from_matrix(reconstruct(mod, to_matrix(instances)));
             },
             py::arg("instances"))
        .def("save", [](const UccModel& mod, const std::string& path) { save_checkpoint(mod, path); },
             py::arg("path"));

    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

    m.def(
        "make_model",
        [](std::size_t input_dim, std::size_t features, std::vector<std::size_t> feature_hidden,
           std::vector<std::size_t> drn_hidden, std::vector<std::size_t> decoder_hidden,
           double alpha, int ucc_lo, int ucc_hi, const KdeConfig& kde, std::uint64_t seed) {
            ModelSpec spec;
            spec.input_dim = input_dim;
            spec.features = features;
            spec.feature_hidden = std::move(feature_hidden);
            spec.drn_hidden = std::move(drn_hidden);
            spec.decoder_hidden = std::move(decoder_hidden);
            spec.alpha = alpha;
            spec.ucc_lo = ucc_lo;
            spec.ucc_hi = ucc_hi;
            spec.kde = kde;
            std::mt19937_64 rng(seed);
            return make_ucc_model(spec, rng);
        },
        py::arg("input_dim"), py::arg("features") = 8,
        py::arg("feature_hidden") = std::vector<std::size_t>{32},
        py::arg("drn_hidden") = std::vector<std::size_t>{32},
        py::arg("decoder_hidden") = std::vector<std::size_t>{32}, py::arg("alpha") = 0.5,
        py::arg("ucc_lo") = 1, py::arg("ucc_hi") = 4, py::arg("kde") = KdeConfig(),
        py::arg("seed") = 1);

    m.def(
        "train_on_pool",
        [](UccModel& model,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const std::vector<int>& labels, int num_classes, std::size_t bags_per_label,
           std::size_t bag_size, double val_fraction, const TrainConfig& cfg) {
            InstancePool pool = to_pool(x, labels, num_classes);
            std::mt19937_64 rng(cfg.seed);
            auto [train_pool, val_pool] = split_pool(pool, val_fraction, rng);
            MilDataset train_ds = make_mil_dataset(train_pool, model.ucc_lo, model.ucc_hi,
                                                   bags_per_label, bag_size, rng);
            MilDataset val_ds =
                make_mil_dataset(val_pool, model.ucc_lo, model.ucc_hi,
                                 std::max<std::size_t>(1, bags_per_label / 4), bag_size, rng);
            auto [best, rep] = train(model, train_ds, val_ds, cfg);
            auto [vloss, vacc] = evaluate(best, val_ds);
            py::dict report;
            report["best_iter"] = rep.best_iter;
            report["best_val_loss"] = rep.best_val_loss;
            report["stopped_at"] = rep.stopped_at;
            report["val_acc"] = vacc;
            return py::make_tuple(best, report);
        },
        py::arg("model"), py::arg("instances"), py::arg("labels"), py::arg("num_classes"),
        py::arg("bags_per_label") = 100, py::arg("bag_size") = 16, py::arg("val_fraction") = 0.2,
        py::arg("config") = TrainConfig(),
        "Sample balanced ucc bags from a labeled pool and train; returns (model, report).");

    m.def(
        "kmeans",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& points,
           std::size_t k, std::size_t restarts, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            ClusterAssignment a = kmeans(to_matrix(points), k, restarts, 300, 1e-10, rng);
            return py::make_tuple(a.labels, a.inertia);
        },
        py::arg("points"), py::arg("k"), py::arg("restarts") = 10, py::arg("seed") = 1,
        "Lloyd k-means with k-means++ seeding; returns (labels, inertia).");

    m.def("clustering_accuracy", &clustering_accuracy, py::arg("truth"), py::arg("predicted"),
          "Best one-to-one cluster-to-label agreement fraction.");

    m.def(
        "gen_synthetic_pool",
        [](int num_classes, std::size_t dim, std::size_t per_class, double scale,
           double separation, std::uint64_t seed) {
            SyntheticSpec spec;
            spec.num_classes = num_classes;
            spec.dim = dim;
            spec.per_class = per_class;
            spec.scale = scale;
            spec.separation = separation;
            spec.seed = seed;
            InstancePool pool = gen_synthetic_pool(spec);
            return py::make_tuple(from_matrix(pool.instances), pool.labels, pool.num_classes);
        },
        py::arg("num_classes") = 4, py::arg("dim") = 8, py::arg("per_class") = 500,
        py::arg("scale") = 0.05, py::arg("separation") = 4.0, py::arg("seed") = 1,
        "Gaussian blob pool in the unit box; returns (instances, labels, num_classes).");
}
