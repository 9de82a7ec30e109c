#include "ucc/bags.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace ucc {

void InstancePool::validate() const {
    if (labels.size() != instances.rows())
        throw ShapeError("pool: labels length " + std::to_string(labels.size()) +
                         " != instance count " + std::to_string(instances.rows()));
    if (!all_finite(instances)) throw NumericError("pool: non-finite instance values");
    if (num_classes == 0) {
        for (int l : labels)
            if (l != 0) throw ContractError("unlabeled pool must carry label 0 everywhere");
        return;
    }
    if (num_classes < 0) throw ContractError("pool: negative class count");
    std::vector<bool> seen(std::size_t(num_classes), false);
    for (int l : labels) {
        if (l < 1 || l > num_classes)
            throw ContractError("pool: label " + std::to_string(l) + " outside 1.." +
                                std::to_string(num_classes));
        seen[std::size_t(l - 1)] = true;
    }
    for (int k = 0; k < num_classes; ++k)
        if (!seen[std::size_t(k)])
            throw ContractError("pool: class " + std::to_string(k + 1) + " has no instances");
}

std::vector<std::vector<std::size_t>> InstancePool::class_indices() const {
    std::vector<std::vector<std::size_t>> by_class(std::size_t(std::max(num_classes, 0)));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int l = labels[i];
        if (l >= 1 && l <= num_classes) by_class[std::size_t(l - 1)].push_back(i);
    }
    return by_class;
}

int ucc_of(const InstancePool& pool, std::span<const std::size_t> indices) {
    if (indices.empty()) throw EmptyBagError("ucc_of: empty subset");
    if (!pool.labeled()) throw ContractError("ucc_of: pool is unlabeled");
    std::set<int> distinct;
    for (std::size_t i : indices) {
        if (i >= pool.size())
            throw ContractError("ucc_of: index " + std::to_string(i) + " out of range");
        distinct.insert(pool.labels[i]);
    }
    return int(distinct.size());
}

Bag make_bag(const InstancePool& pool, std::vector<std::size_t> indices) {
    const int ucc = ucc_of(pool, indices);
    return Bag{std::move(indices), ucc};
}

Bag make_bag_with_label(std::vector<std::size_t> indices, int ucc) {
    if (indices.empty()) throw EmptyBagError("bag must be non-empty");
    if (ucc < 1) throw ContractError("bag ucc label must be >= 1");
    return Bag{std::move(indices), ucc};
}

Bag sample_bag(const InstancePool& pool, int target_ucc, std::size_t bag_size,
               std::mt19937_64& rng) {
    if (!pool.labeled()) throw ContractError("sample_bag: pool is unlabeled");
    if (target_ucc < 1 || target_ucc > pool.num_classes ||
        std::size_t(target_ucc) > bag_size)
        throw ContractError("sample_bag: infeasible target_ucc " + std::to_string(target_ucc) +
                            " for K=" + std::to_string(pool.num_classes) +
                            ", bag_size=" + std::to_string(bag_size));

    // Choose target_ucc classes uniformly without replacement.
    std::vector<int> classes(std::size_t(pool.num_classes));
    for (int k = 0; k < pool.num_classes; ++k) classes[std::size_t(k)] = k + 1;
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(std::size_t(target_ucc));

    const auto by_class = pool.class_indices();
    std::vector<std::size_t> caps(std::size_t(target_ucc), 0);
    std::size_t cap_total = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        caps[c] = by_class[std::size_t(classes[c] - 1)].size();
        cap_total += caps[c];
    }
    if (cap_total < bag_size) {
        const std::size_t smallest = std::size_t(
            std::min_element(caps.begin(), caps.end()) - caps.begin());
        throw ContractError("sample_bag: class " + std::to_string(classes[smallest]) +
                            " has only " + std::to_string(caps[smallest]) +
                            " instances, needs " +
                            std::to_string(bag_size - (cap_total - caps[smallest])));
    }

    // One guaranteed slot per chosen class, remaining slots uniform among the
    // classes that still have spare instances.
    std::vector<std::size_t> slots(std::size_t(target_ucc), 1);
    for (std::size_t s = std::size_t(target_ucc); s < bag_size; ++s) {
        std::vector<std::size_t> open;
        for (std::size_t c = 0; c < slots.size(); ++c)
            if (slots[c] < caps[c]) open.push_back(c);
        std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
        ++slots[open[pick(rng)]];
    }

    std::vector<std::size_t> indices;
    indices.reserve(bag_size);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        auto members = by_class[std::size_t(classes[c] - 1)];
        std::shuffle(members.begin(), members.end(), rng);
        indices.insert(indices.end(), members.begin(), members.begin() + long(slots[c]));
    }
    std::shuffle(indices.begin(), indices.end(), rng);
    return Bag{std::move(indices), target_ucc};
}

MilDataset make_mil_dataset(const InstancePool& pool, int ucc_lo, int ucc_hi,
                            std::size_t bags_per_label, std::size_t bag_size,
                            std::mt19937_64& rng) {
    if (ucc_lo < 1 || ucc_lo > ucc_hi)
        throw ContractError("make_mil_dataset: bad ucc range");
    MilDataset ds;
    ds.pool = &pool;
    ds.bags.reserve(std::size_t(ucc_hi - ucc_lo + 1) * bags_per_label);
    for (int label = ucc_lo; label <= ucc_hi; ++label)
        for (std::size_t i = 0; i < bags_per_label; ++i)
            ds.bags.push_back(sample_bag(pool, label, bag_size, rng));
    return ds;
}

Matrix bag_features(const InstancePool& pool, const Bag& bag) {
    Matrix out(bag.indices.size(), pool.dim());
    for (std::size_t r = 0; r < bag.indices.size(); ++r) {
        const auto src = pool.instances.row(bag.indices[r]);
        auto dst = out.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

std::pair<InstancePool, InstancePool> split_pool(const InstancePool& pool, double val_fraction,
                                                 std::mt19937_64& rng) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ContractError("split_pool: val_fraction must be in (0,1)");
    if (!pool.labeled()) throw ContractError("split_pool: pool is unlabeled");

    std::vector<std::size_t> train_idx, val_idx;
    for (auto& members : pool.class_indices()) {
        std::shuffle(members.begin(), members.end(), rng);
        std::size_t n_val = std::size_t(double(members.size()) * val_fraction);
        n_val = std::clamp<std::size_t>(n_val, 1, members.size() - 1);
        val_idx.insert(val_idx.end(), members.begin(), members.begin() + long(n_val));
        train_idx.insert(train_idx.end(), members.begin() + long(n_val), members.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    auto subset = [&pool](const std::vector<std::size_t>& idx) {
        InstancePool p;
        p.instances = Matrix(idx.size(), pool.dim());
        p.labels.resize(idx.size());
        p.num_classes = pool.num_classes;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const auto src = pool.instances.row(idx[r]);
            std::copy(src.begin(), src.end(), p.instances.row(r).begin());
            p.labels[r] = pool.labels[idx[r]];
        }
        p.validate();
        return p;
    };
    return {subset(train_idx), subset(val_idx)};
}

}  // namespace ucc
