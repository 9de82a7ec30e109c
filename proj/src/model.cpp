#include "ucc/model.hpp"

#include "ucc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace ucc {

namespace {

constexpr double kLogClip = 1e-12;

void require(bool ok, const char* msg) {
    if (!ok) throw ContractError(msg);
}

}  // namespace

void UccModel::validate() const {
    feature_net.validate();
    drn_net.validate();
    decoder_net.validate();
    kde.validate();
    require(ucc_lo >= 1, "ucc_lo must be at least 1");
    require(ucc_hi >= ucc_lo, "ucc_hi must be >= ucc_lo");
    require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0,1]");
    require(feature_net.layers.back().act == Activation::Sigmoid,
            "feature net must end in a sigmoid layer");
    require(drn_net.layers.back().act == Activation::Softmax,
            "drn net must end in a softmax layer");
    require(drn_net.layers.size() >= 2, "drn net needs at least one hidden layer");
    require(drn_net.out_dim() == static_cast<std::size_t>(num_labels()),
            "drn output dim must match the ucc label range");
    std::size_t pooled = pooling == Pooling::Kde
                             ? feature_net.out_dim() * static_cast<std::size_t>(kde.bins)
                             : feature_net.out_dim();
    require(drn_net.in_dim() == pooled, "drn input dim must match the pooled size");
    require(decoder_net.in_dim() == feature_net.out_dim(),
            "decoder input dim must match the feature dim");
    require(decoder_net.out_dim() == feature_net.in_dim(),
            "decoder output dim must match the instance dim");
}

UccModel make_ucc_model(const ModelSpec& spec, std::mt19937_64& rng) {
    require(spec.input_dim > 0, "input_dim must be positive");
    require(spec.features > 0, "features must be positive");
    require(!spec.drn_hidden.empty(), "drn needs at least one hidden layer");

    UccModel m;
    m.kde = spec.kde;
    m.alpha = spec.alpha;
    m.ucc_lo = spec.ucc_lo;
    m.ucc_hi = spec.ucc_hi;
    m.pooling = spec.pooling;

    auto dims_of = [](std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
        std::vector<std::size_t> dims{in};
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(out);
        return dims;
    };
    auto acts_of = [](std::size_t n_layers, Activation head) {
        std::vector<Activation> acts(n_layers, Activation::Relu);
        acts.back() = head;
        return acts;
    };

    auto fdims = dims_of(spec.input_dim, spec.feature_hidden, spec.features);
    m.feature_net = make_mlp(fdims, acts_of(fdims.size() - 1, Activation::Sigmoid), rng);

    std::size_t pooled = spec.pooling == Pooling::Kde
                             ? spec.features * static_cast<std::size_t>(spec.kde.bins)
                             : spec.features;
    auto ddims = dims_of(pooled, spec.drn_hidden, static_cast<std::size_t>(m.num_labels()));
    m.drn_net = make_mlp(ddims, acts_of(ddims.size() - 1, Activation::Softmax), rng);

    auto rdims = dims_of(spec.features, spec.decoder_hidden, spec.input_dim);
    m.decoder_net = make_mlp(rdims, acts_of(rdims.size() - 1, Activation::Linear), rng);

    m.validate();
    return m;
}

Matrix extract_features(const UccModel& model, const Matrix& instances) {
    if (instances.rows() == 0) throw EmptyBagError("cannot extract features from an empty bag");
    return mlp_forward(model.feature_net, instances);
}

namespace {

/// Pooled row vector (1 x drn_in) from the per-instance features.
Matrix pool_features(const UccModel& model, const Matrix& features) {
    if (model.pooling == Pooling::Kde) {
        auto [dist, cache] = kde_forward(features, model.kde);
        Matrix out(1, dist.features * dist.bins);
        for (std::size_t j = 0; j < dist.features; ++j)
            for (std::size_t b = 0; b < dist.bins; ++b)
                out(0, j * dist.bins + b) = dist.at(j, b);
        return out;
    }
    std::vector<double> m = mean_pool(features);
    Matrix out(1, m.size());
    std::copy(m.begin(), m.end(), out.data().begin());
    return out;
}

}  // namespace

std::vector<double> predict_ucc(const UccModel& model, const Matrix& instances) {
    Matrix features = extract_features(model, instances);
    Matrix pooled = pool_features(model, features);
    Matrix probs = mlp_forward(model.drn_net, pooled);
    return probs.data();
}

int predict_ucc_label(const UccModel& model, const Matrix& instances) {
    std::vector<double> p = predict_ucc(model, instances);
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.size(); ++k)
        if (p[k] > p[best]) best = k;
    return model.ucc_lo + static_cast<int>(best);
}

Matrix reconstruct(const UccModel& model, const Matrix& instances) {
    return mlp_forward(model.decoder_net, extract_features(model, instances));
}

std::vector<double> ucc_onehot(const UccModel& model, int label) {
    if (label < model.ucc_lo || label > model.ucc_hi)
        throw ContractError("ucc label outside the model's label range");
    std::vector<double> y(static_cast<std::size_t>(model.num_labels()), 0.0);
    y[static_cast<std::size_t>(label - model.ucc_lo)] = 1.0;
    return y;
}

std::pair<double, BagGrads> bag_loss_and_grads(const UccModel& model, const Matrix& bag_instances,
                                               std::span<const double> ucc_onehot_vec,
                                               double alpha) {
    if (bag_instances.rows() == 0) throw EmptyBagError("bag_loss_and_grads on an empty bag");
    require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0,1]");
    require(ucc_onehot_vec.size() == static_cast<std::size_t>(model.num_labels()),
            "one-hot target length must match the label range");

    const std::size_t n = bag_instances.rows();
    const std::size_t j_dim = model.feature_dim();

    MlpCache fcache;
    Matrix features = mlp_forward(model.feature_net, bag_instances, &fcache);

    // ucc branch
    KdeCache kcache;
    Matrix pooled(1, model.drn_net.in_dim());
    std::size_t bins = static_cast<std::size_t>(model.kde.bins);
    if (model.pooling == Pooling::Kde) {
        auto [dist, kc] = kde_forward(features, model.kde);
        kcache = std::move(kc);
        for (std::size_t j = 0; j < j_dim; ++j)
            for (std::size_t b = 0; b < bins; ++b)
                pooled(0, j * bins + b) = dist.at(j, b);
    } else {
        std::vector<double> m = mean_pool(features);
        std::copy(m.begin(), m.end(), pooled.data().begin());
    }

    MlpCache dcache;
    Matrix probs = mlp_forward(model.drn_net, pooled, &dcache);

    double ce = 0.0;
    Matrix probs_up(1, probs.cols());
    for (std::size_t k = 0; k < probs.cols(); ++k) {
        double p = std::max(probs(0, k), kLogClip);
        ce -= ucc_onehot_vec[k] * std::log(p);
        probs_up(0, k) = -ucc_onehot_vec[k] / p;
    }

    GradBundle drn_grads = mlp_backward(model.drn_net, dcache, probs_up);

    // autoencoder branch
    MlpCache rcache;
    Matrix recon = mlp_forward(model.decoder_net, features, &rcache);
    double mse = 0.0;
    Matrix recon_up(n, recon.cols());
    const double inv_count = 1.0 / static_cast<double>(n * recon.cols());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < recon.cols(); ++c) {
            double diff = recon(i, c) - bag_instances(i, c);
            mse += diff * diff * inv_count;
            recon_up(i, c) = 2.0 * diff * inv_count;
        }
    }

    GradBundle decoder_grads = mlp_backward(model.decoder_net, rcache, recon_up);

    // route both branches into the shared feature extractor
    Matrix feat_up(n, j_dim);
    if (model.pooling == Pooling::Kde) {
        Matrix dist_up(j_dim, bins);
        for (std::size_t j = 0; j < j_dim; ++j)
            for (std::size_t b = 0; b < bins; ++b)
                dist_up(j, b) = drn_grads.input_grad(0, j * bins + b);
        feat_up = kde_backward(kcache, model.kde, dist_up);
    } else {
        feat_up = mean_pool_backward(drn_grads.input_grad.data(), n);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < j_dim; ++j)
            feat_up(i, j) = alpha * feat_up(i, j) + (1.0 - alpha) * decoder_grads.input_grad(i, j);

    GradBundle feature_grads = mlp_backward(model.feature_net, fcache, feat_up);

    drn_grads.scale(alpha);
    decoder_grads.scale(1.0 - alpha);

    double loss = alpha * ce + (1.0 - alpha) * mse;
    if (!std::isfinite(loss)) throw NumericError("non-finite bag loss");
    return {loss, BagGrads{std::move(feature_grads), std::move(drn_grads), std::move(decoder_grads)}};
}

void TrainConfig::validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
    require(batch_size > 0, "batch_size must be positive");
    require(val_period > 0, "val_period must be positive");
    require(patience >= val_period, "patience must be at least val_period");
}

std::pair<double, double> evaluate(const UccModel& model, const MilDataset& ds) {
    require(!ds.bags.empty(), "cannot evaluate on an empty dataset");
    double total = 0.0;
    std::size_t correct = 0;
    for (const Bag& bag : ds.bags) {
        Matrix inst = bag_features(*ds.pool, bag);
        auto y = ucc_onehot(model, bag.ucc);
        std::vector<double> p = predict_ucc(model, inst);
        double ce = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k)
            ce -= y[k] * std::log(std::max(p[k], kLogClip));
        Matrix recon = reconstruct(model, inst);
        double mse = 0.0;
        for (std::size_t t = 0; t < recon.size(); ++t) {
            double diff = recon.data()[t] - inst.data()[t];
            mse += diff * diff;
        }
        mse /= static_cast<double>(recon.size());
        total += model.alpha * ce + (1.0 - model.alpha) * mse;
        std::size_t best = 0;
        for (std::size_t k = 1; k < p.size(); ++k)
            if (p[k] > p[best]) best = k;
        if (model.ucc_lo + static_cast<int>(best) == bag.ucc) ++correct;
    }
    return {total / static_cast<double>(ds.bags.size()),
            static_cast<double>(correct) / static_cast<double>(ds.bags.size())};
}

std::pair<UccModel, TrainReport> train(const UccModel& model, const MilDataset& train_bags,
                                       const MilDataset& val_bags, const TrainConfig& cfg) {
    cfg.validate();
    model.validate();
    require(!train_bags.bags.empty(), "training set has no bags");
    require(!val_bags.bags.empty(), "validation set has no bags");

    UccModel cur = model;
    UccModel best = model;
    TrainReport report;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, train_bags.bags.size() - 1);

    auto [val0, acc0] = evaluate(cur, val_bags);
    report.best_val_loss = val0;
    report.best_iter = 0;
    report.history.push_back({0, 0.0, val0, acc0});

    std::size_t last_improve = 0;
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        GradBundle facc = zero_grads(cur.feature_net, 0);
        GradBundle dacc = zero_grads(cur.drn_net, 0);
        GradBundle racc = zero_grads(cur.decoder_net, 0);
        double batch_loss = 0.0;

        for (std::size_t s = 0; s < cfg.batch_size; ++s) {
            const Bag& bag = train_bags.bags[pick(rng)];
            Matrix inst = bag_features(*train_bags.pool, bag);
            auto y = ucc_onehot(cur, bag.ucc);
            double loss;
            BagGrads grads;
            try {
                std::tie(loss, grads) = bag_loss_and_grads(cur, inst, y, cur.alpha);
            } catch (const NumericError&) {
                throw TrainingDiverged(iter);
            }
            batch_loss += loss * inv_batch;
            facc.add_scaled(grads.feature, inv_batch);
            dacc.add_scaled(grads.drn, inv_batch);
            racc.add_scaled(grads.decoder, inv_batch);
        }
        if (!std::isfinite(batch_loss)) throw TrainingDiverged(iter);

        apply_gradients(cur.feature_net, facc, cfg.learning_rate);
        apply_gradients(cur.drn_net, dacc, cfg.learning_rate);
        apply_gradients(cur.decoder_net, racc, cfg.learning_rate);

        if (iter % cfg.val_period == 0) {
            auto [vloss, vacc] = evaluate(cur, val_bags);
            if (!std::isfinite(vloss)) throw TrainingDiverged(iter);
            report.history.push_back({iter, batch_loss, vloss, vacc});
            if (vloss < report.best_val_loss) {
                report.best_val_loss = vloss;
                report.best_iter = iter;
                best = cur;
                last_improve = iter;
            } else if (iter - last_improve >= cfg.patience) {
                report.stopped_at = iter;
                return {best, report};
            }
        }
    }
    report.stopped_at = cfg.max_iters;
    return {best, report};
}

}  // namespace ucc
