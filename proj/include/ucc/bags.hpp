#pragma once

#include "ucc/matrix.hpp"

#include <random>
#include <vector>

namespace ucc {

/// Labeled instance pool. Labels are hidden from the model: they drive bag
/// construction and evaluation only. num_classes == 0 marks an unlabeled
/// pool (all labels 0); labeled pools use class ids 1..num_classes and every
/// class must be represented.
struct InstancePool {
    Matrix instances;          // m x d
    std::vector<int> labels;   // length m
    int num_classes = 0;

    std::size_t size() const { return instances.rows(); }
    std::size_t dim() const { return instances.cols(); }
    bool labeled() const { return num_classes > 0; }

    void validate() const;
    /// Per-class instance index lists, classes 1..K at slots 0..K-1.
    std::vector<std::vector<std::size_t>> class_indices() const;
};

/// An ordered multiset of pool indices with its unique-class-count label.
struct Bag {
    std::vector<std::size_t> indices;
    int ucc = 0;
};

/// Number of distinct pool labels among the given indices.
int ucc_of(const InstancePool& pool, std::span<const std::size_t> indices);

/// Checked Bag construction: computes and validates the ucc label.
Bag make_bag(const InstancePool& pool, std::vector<std::size_t> indices);

/// Bag with an externally supplied label (the segmentation pipeline labels
/// bags from mask statistics, not from pool labels).
Bag make_bag_with_label(std::vector<std::size_t> indices, int ucc);

/// Draw a bag of exactly bag_size distinct instances spanning exactly
/// target_ucc classes: classes chosen uniformly, every chosen class gets at
/// least one slot, remaining slots assigned uniformly among the classes
/// with spare instances.
Bag sample_bag(const InstancePool& pool, int target_ucc, std::size_t bag_size,
               std::mt19937_64& rng);

struct MilDataset {
    const InstancePool* pool = nullptr;
    std::vector<Bag> bags;

    std::size_t size() const { return bags.size(); }
};

/// Balanced dataset: bags_per_label bags for every label in [ucc_lo, ucc_hi].
MilDataset make_mil_dataset(const InstancePool& pool, int ucc_lo, int ucc_hi,
                            std::size_t bags_per_label, std::size_t bag_size,
                            std::mt19937_64& rng);

/// Gather a bag's instance rows into an n x d matrix.
Matrix bag_features(const InstancePool& pool, const Bag& bag);

/// Stratified instance split for train/validation: every class keeps at
/// least one instance on each side.
std::pair<InstancePool, InstancePool> split_pool(const InstancePool& pool, double val_fraction,
                                                 std::mt19937_64& rng);

}  // namespace ucc
