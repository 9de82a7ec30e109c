#pragma once

#include "ucc/bags.hpp"
#include "ucc/kde.hpp"
#include "ucc/model.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ucc {

/// Answers the true unique class count for any subset of a labeled pool.
class UccOracle {
public:
    explicit UccOracle(const InstancePool& pool);
    int operator()(std::span<const std::size_t> indices) const;
    const InstancePool& pool() const { return *pool_; }

private:
    const InstancePool* pool_;
};

struct Partition {
    std::vector<std::vector<std::size_t>> blocks;

    std::size_t num_blocks() const { return blocks.size(); }
    /// Flattened block labels aligned with the given universe ordering.
    std::vector<int> labels_for(std::span<const std::size_t> universe) const;
    void validate(std::span<const std::size_t> universe) const;
};

/// Constructive clustering from ucc queries alone: start with singleton
/// blocks, repeatedly visit block pairs in random order and merge a pair
/// whenever the oracle reports their union has a single class. Stops after
/// a merge-free pass; pass count capped at |universe|^2.
Partition cluster_by_ucc(std::span<const std::size_t> universe, const UccOracle& oracle,
                         std::mt19937_64& rng);

using FeatureMap = std::function<Matrix(const Matrix&)>;

struct PropReport {
    std::string prop;
    bool passed = false;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double stat = 0.0;   // summary statistic, meaning depends on the check
    std::string note;
};

/// Per-class pooled feature distributions: one [J x B] matrix per class,
/// from the KDE of the mapped features of all instances of that class.
std::vector<Matrix> pure_class_distributions(const InstancePool& pool, const KdeConfig& kde,
                                             const FeatureMap& fmap);

/// Random disjoint cross-class pure pairs must have differing feature
/// distributions; stat = minimum observed L1 distance.
PropReport check_prop1(const InstancePool& pool, const KdeConfig& kde, const FeatureMap& fmap,
                       std::size_t trials, std::mt19937_64& rng);

/// All pure-class distribution pairs separated in L1; stat = min pairwise
/// distance, pass threshold 1e-3.
PropReport check_prop3(const InstancePool& pool, const KdeConfig& kde, const FeatureMap& fmap);

/// ucc is unchanged when class proportions vary at fixed class support.
PropReport check_propB1(const InstancePool& pool, std::size_t trials, std::mt19937_64& rng);

/// Sets with identical compositions have identical distributions, and so
/// does their union mix; with a model given, predicted counts also agree.
PropReport check_propB3(const InstancePool& pool, const KdeConfig& kde, std::size_t trials,
                        std::mt19937_64& rng, const UccModel* model = nullptr);

}  // namespace ucc
