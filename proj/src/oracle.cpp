#include "ucc/oracle.hpp"

#include "ucc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ucc {

UccOracle::UccOracle(const InstancePool& pool) : pool_(&pool) {
    if (!pool.labeled()) throw ContractError("UccOracle needs a labeled pool");
}

int UccOracle::operator()(std::span<const std::size_t> indices) const {
    return ucc_of(*pool_, indices);
}

std::vector<int> Partition::labels_for(std::span<const std::size_t> universe) const {
    std::vector<int> out(universe.size(), -1);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t idx : blocks[b]) {
            auto it = std::find(universe.begin(), universe.end(), idx);
            if (it == universe.end()) throw ContractError("partition index not in universe");
            out[static_cast<std::size_t>(it - universe.begin())] = static_cast<int>(b);
        }
    }
    for (int l : out)
        if (l < 0) throw ContractError("partition does not cover the universe");
    return out;
}

void Partition::validate(std::span<const std::size_t> universe) const {
    std::size_t total = 0;
    for (const auto& b : blocks) {
        if (b.empty()) throw ContractError("partition contains an empty block");
        total += b.size();
    }
    if (total != universe.size()) throw ContractError("partition size mismatch");
    labels_for(universe);  // coverage + disjointness via the -1 check
}

Partition cluster_by_ucc(std::span<const std::size_t> universe, const UccOracle& oracle,
                         std::mt19937_64& rng) {
    if (universe.empty()) throw ContractError("cluster_by_ucc on an empty universe");

    std::vector<std::vector<std::size_t>> blocks;
    blocks.reserve(universe.size());
    for (std::size_t idx : universe) blocks.push_back({idx});

    const std::size_t max_passes = universe.size() * universe.size();
    std::vector<std::size_t> probe;

    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        bool merged_any = false;
        std::vector<std::size_t> order(blocks.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);

        std::vector<char> dead(blocks.size(), 0);
        for (std::size_t a = 0; a < order.size(); ++a) {
            std::size_t ia = order[a];
            if (dead[ia]) continue;
            for (std::size_t b = a + 1; b < order.size(); ++b) {
                std::size_t ib = order[b];
                if (dead[ib]) continue;
                probe.assign(blocks[ia].begin(), blocks[ia].end());
                probe.insert(probe.end(), blocks[ib].begin(), blocks[ib].end());
                if (oracle(probe) == 1) {
                    blocks[ia] = std::move(probe);
                    dead[ib] = 1;
                    merged_any = true;
                    break;
                }
            }
        }
        if (merged_any) {
            std::vector<std::vector<std::size_t>> next;
            next.reserve(blocks.size());
            for (std::size_t i = 0; i < blocks.size(); ++i)
                if (!dead[i]) next.push_back(std::move(blocks[i]));
            blocks = std::move(next);
        } else {
            return Partition{std::move(blocks)};
        }
    }
    throw NumericError("cluster_by_ucc failed to converge within the pass cap");
}

std::vector<Matrix> pure_class_distributions(const InstancePool& pool, const KdeConfig& kde,
                                             const FeatureMap& fmap) {
    if (!pool.labeled()) throw ContractError("pure_class_distributions needs a labeled pool");
    auto by_class = pool.class_indices();
    std::vector<Matrix> out;
    out.reserve(by_class.size());
    for (const auto& members : by_class) {
        Matrix rows(members.size(), pool.dim());
        for (std::size_t i = 0; i < members.size(); ++i) {
            auto src = pool.instances.row(members[i]);
            std::copy(src.begin(), src.end(), rows.row(i).begin());
        }
        auto [dist, cache] = kde_forward(fmap(rows), kde);
        Matrix d(dist.features, dist.bins);
        d.data() = dist.values;
        out.push_back(std::move(d));
    }
    return out;
}

namespace {

Matrix gather_rows(const InstancePool& pool, std::span<const std::size_t> idx) {
    Matrix rows(idx.size(), pool.dim());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto src = pool.instances.row(idx[i]);
        std::copy(src.begin(), src.end(), rows.row(i).begin());
    }
    return rows;
}

Matrix dist_of(const Matrix& features, const KdeConfig& kde) {
    auto [dist, cache] = kde_forward(features, kde);
    Matrix d(dist.features, dist.bins);
    d.data() = dist.values;
    return d;
}

std::vector<std::size_t> random_subset(const std::vector<std::size_t>& members, std::size_t want,
                                       std::mt19937_64& rng) {
    std::vector<std::size_t> shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.resize(want);
    return shuffled;
}

}  // namespace

PropReport check_prop1(const InstancePool& pool, const KdeConfig& kde, const FeatureMap& fmap,
                       std::size_t trials, std::mt19937_64& rng) {
    if (pool.num_classes < 2) throw ContractError("check_prop1 needs at least two classes");
    UccOracle oracle(pool);
    auto by_class = pool.class_indices();

    PropReport rep;
    rep.prop = "prop1";
    rep.trials = trials;
    rep.stat = std::numeric_limits<double>::infinity();

    std::uniform_int_distribution<int> pick_class(0, pool.num_classes - 1);
    for (std::size_t t = 0; t < trials; ++t) {
        int ca = pick_class(rng), cb = pick_class(rng);
        while (cb == ca) cb = pick_class(rng);
        const auto& ma = by_class[static_cast<std::size_t>(ca)];
        const auto& mb = by_class[static_cast<std::size_t>(cb)];
        std::uniform_int_distribution<std::size_t> na(1, ma.size());
        std::uniform_int_distribution<std::size_t> nb(1, mb.size());
        auto sa = random_subset(ma, na(rng), rng);
        auto sb = random_subset(mb, nb(rng), rng);

        std::vector<std::size_t> joint = sa;
        joint.insert(joint.end(), sb.begin(), sb.end());
        if (oracle(joint) != 2) continue;  // hypothesis not met, excluded

        Matrix da = dist_of(fmap(gather_rows(pool, sa)), kde);
        Matrix db = dist_of(fmap(gather_rows(pool, sb)), kde);
        double dist = l1_distance(da, db);
        rep.stat = std::min(rep.stat, dist);
        if (!(dist > 0.0)) ++rep.violations;
    }
    rep.passed = rep.violations == 0;
    rep.note = "min L1 distance over cross-class pure pairs";
    return rep;
}

PropReport check_prop3(const InstancePool& pool, const KdeConfig& kde, const FeatureMap& fmap) {
    auto dists = pure_class_distributions(pool, kde, fmap);
    if (dists.size() < 2) throw ContractError("check_prop3 needs at least two classes");

    PropReport rep;
    rep.prop = "prop3";
    rep.stat = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < dists.size(); ++a) {
        for (std::size_t b = a + 1; b < dists.size(); ++b) {
            ++rep.trials;
            double dist = l1_distance(dists[a], dists[b]);
            rep.stat = std::min(rep.stat, dist);
            if (!(dist > 1e-3)) ++rep.violations;
        }
    }
    rep.passed = rep.violations == 0;
    rep.note = "min pairwise L1 over pure-class distributions, threshold 1e-3";
    return rep;
}

PropReport check_propB1(const InstancePool& pool, std::size_t trials, std::mt19937_64& rng) {
    if (!pool.labeled()) throw ContractError("check_propB1 needs a labeled pool");
    auto by_class = pool.class_indices();

    PropReport rep;
    rep.prop = "propB1";
    rep.trials = trials;

    std::uniform_int_distribution<int> pick_c(1, pool.num_classes);
    for (std::size_t t = 0; t < trials; ++t) {
        int c = pick_c(rng);
        std::vector<int> classes(static_cast<std::size_t>(pool.num_classes));
        std::iota(classes.begin(), classes.end(), 0);
        std::shuffle(classes.begin(), classes.end(), rng);
        classes.resize(static_cast<std::size_t>(c));

        // two index sets over the same class support, different proportions
        auto draw = [&](std::mt19937_64& r) {
            std::vector<std::size_t> out;
            for (int cls : classes) {
                const auto& members = by_class[static_cast<std::size_t>(cls)];
                std::uniform_int_distribution<std::size_t> cnt(1, members.size());
                auto sub = random_subset(members, cnt(r), r);
                out.insert(out.end(), sub.begin(), sub.end());
            }
            return out;
        };
        auto s1 = draw(rng);
        auto s2 = draw(rng);
        if (ucc_of(pool, s1) != c || ucc_of(pool, s2) != c) ++rep.violations;
    }
    rep.passed = rep.violations == 0;
    rep.stat = static_cast<double>(rep.trials - rep.violations);
    rep.note = "ucc stable under class-proportion resampling";
    return rep;
}

PropReport check_propB3(const InstancePool& pool, const KdeConfig& kde, std::size_t trials,
                        std::mt19937_64& rng, const UccModel* model) {
    if (pool.size() == 0) throw ContractError("check_propB3 needs a non-empty pool");

    PropReport rep;
    rep.prop = "propB3";
    rep.trials = trials;
    rep.stat = 0.0;

    std::uniform_int_distribution<std::size_t> pick_n(1, std::min<std::size_t>(16, pool.size()));
    std::uniform_int_distribution<std::size_t> pick_row(0, pool.size() - 1);

    for (std::size_t t = 0; t < trials; ++t) {
        std::size_t n = pick_n(rng);
        std::vector<std::size_t> comp(n);
        for (auto& idx : comp) idx = pick_row(rng);

        // two sets sharing one composition, plus their union
        Matrix part = gather_rows(pool, comp);
        Matrix both(2 * n, pool.dim());
        for (std::size_t i = 0; i < n; ++i) {
            auto src = part.row(i);
            std::copy(src.begin(), src.end(), both.row(i).begin());
            std::copy(src.begin(), src.end(), both.row(n + i).begin());
        }

        Matrix features = model ? extract_features(*model, part) : part;
        Matrix features2 = model ? extract_features(*model, both) : both;
        const KdeConfig& cfg = model ? model->kde : kde;

        Matrix h_part = dist_of(features, cfg);
        Matrix h_union = dist_of(features2, cfg);
        FeatureDistribution fa(h_part.rows(), h_part.cols());
        fa.values = h_part.data();
        auto mixed = mix_distributions({{fa, 0.5}, {fa, 0.5}});
        Matrix h_mixed(mixed.features, mixed.bins);
        h_mixed.data() = mixed.values;

        double dev = std::max(l1_distance(h_union, h_part), l1_distance(h_mixed, h_part));
        rep.stat = std::max(rep.stat, dev);
        bool ok = dev <= 1e-9;
        if (ok && model) {
            int a = predict_ucc_label(*model, part);
            int b = predict_ucc_label(*model, both);
            ok = a == b;
        }
        if (!ok) ++rep.violations;
    }
    rep.passed = rep.violations == 0;
    rep.note = "max L1 deviation between a set, its duplicate-union and the 50/50 mix";
    return rep;
}

}  // namespace ucc
