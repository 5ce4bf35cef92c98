#pragma once

// Finite probability spaces, measure families and the partition lattice.
//
// A sub-sigma-field of a finite space is represented by its generating
// partition. Partitions are kept in canonical form (elements ascending
// within a block, blocks ordered by least element) so equality is structural.

#include "condexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace condexp {

/// Row sums of a measure family must be within this distance of one.
inline constexpr double kProbabilityTolerance = 1e-12;

using Index = std::size_t;
using Block = std::vector<Index>;

class OutcomeSpace {
public:
    explicit OutcomeSpace(std::vector<std::string> labels) : labels_(std::move(labels))
    {
        if (labels_.empty()) {
            throw StructuralError("outcome space must have at least one outcome");
        }
        std::unordered_set<std::string> seen;
        for (Index i = 0; i < labels_.size(); ++i) {
            if (!seen.insert(labels_[i]).second) {
                throw StructuralError("duplicate outcome label '" + labels_[i] + "' at index " +
                                      std::to_string(i));
            }
        }
    }

    /// Space with labels "0", "1", ..., "n-1".
    static OutcomeSpace indexed(std::size_t n)
    {
        std::vector<std::string> labels(n);
        for (Index i = 0; i < n; ++i) labels[i] = std::to_string(i);
        return OutcomeSpace(std::move(labels));
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(Index i) const { return labels_.at(i); }

    bool operator==(const OutcomeSpace&) const = default;

private:
    std::vector<std::string> labels_;
};

/// A finite family of probability weight rows over one outcome space.
class MeasureFamily {
public:
    MeasureFamily(std::vector<std::vector<double>> rows) : rows_(std::move(rows))
    {
        if (rows_.empty()) throw StructuralError("measure family needs at least one measure");
        const std::size_t n = rows_.front().size();
        if (n == 0) throw StructuralError("measure rows must be non-empty");
        for (Index g = 0; g < rows_.size(); ++g) {
            const auto& row = rows_[g];
            if (row.size() != n) {
                throw StructuralError("measure " + std::to_string(g) + " has " +
                                      std::to_string(row.size()) + " weights, expected " +
                                      std::to_string(n));
            }
            double sum = 0.0;
            for (Index w = 0; w < n; ++w) {
                if (!std::isfinite(row[w]) || row[w] < 0.0) {
                    throw StructuralError("measure " + std::to_string(g) + " has invalid weight at index " +
                                          std::to_string(w));
                }
                sum += row[w];
            }
            if (std::abs(sum - 1.0) > kProbabilityTolerance) {
                throw StructuralError("measure " + std::to_string(g) + " sums to " + std::to_string(sum) +
                                      ", not 1");
            }
        }
    }

    static MeasureFamily single(std::vector<double> row)
    {
        return MeasureFamily(std::vector<std::vector<double>>{std::move(row)});
    }

    static MeasureFamily uniform(std::size_t n)
    {
        return single(std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    std::size_t size() const noexcept { return rows_.front().size(); }
    std::size_t count() const noexcept { return rows_.size(); }
    std::span<const double> row(Index gamma) const { return rows_.at(gamma); }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

    /// Equal-weight mixture of all rows.
    std::vector<double> mixture() const
    {
        std::vector<double> out(size(), 0.0);
        for (const auto& row : rows_) {
            for (Index w = 0; w < out.size(); ++w) out[w] += row[w];
        }
        for (double& v : out) v /= static_cast<double>(count());
        return out;
    }

private:
    std::vector<std::vector<double>> rows_;
};

class RandomVariable {
public:
    RandomVariable() = default;
    explicit RandomVariable(std::vector<double> values) : values_(std::move(values))
    {
        for (Index i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw StructuralError("random variable has a non-finite entry at index " + std::to_string(i));
            }
        }
    }
    RandomVariable(std::initializer_list<double> values) : RandomVariable(std::vector<double>(values)) {}

    static RandomVariable constant(std::size_t n, double value)
    {
        return RandomVariable(std::vector<double>(n, value));
    }
    static RandomVariable indicator(std::size_t n, Index at)
    {
        std::vector<double> v(n, 0.0);
        v.at(at) = 1.0;
        return RandomVariable(std::move(v));
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](Index i) const { return values_[i]; }
    double& operator[](Index i) { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }

    bool operator==(const RandomVariable&) const = default;

private:
    std::vector<double> values_;
};

class Partition {
public:
    /// Validates disjointness, coverage of 0..n-1 and non-emptiness, then
    /// stores the blocks in canonical order.
    Partition(std::size_t n, std::vector<Block> blocks) : block_of_(n, kUnassigned)
    {
        if (n == 0) throw StructuralError("partition of an empty space");
        for (Index b = 0; b < blocks.size(); ++b) {
            if (blocks[b].empty()) throw StructuralError("block " + std::to_string(b) + " is empty");
            for (Index w : blocks[b]) {
                if (w >= n) {
                    throw StructuralError("index " + std::to_string(w) + " in block " + std::to_string(b) +
                                          " is out of range for a space of size " + std::to_string(n));
                }
                if (block_of_[w] != kUnassigned) {
                    throw StructuralError("index " + std::to_string(w) + " appears in blocks " +
                                          std::to_string(block_of_[w]) + " and " + std::to_string(b));
                }
                block_of_[w] = b;
            }
        }
        for (Index w = 0; w < n; ++w) {
            if (block_of_[w] == kUnassigned) {
                throw StructuralError("index " + std::to_string(w) + " is not covered by any block");
            }
        }
        const std::vector<Index> labels = block_of_;
        canonicalize(labels);
    }

    /// Builds the partition whose blocks are the level sets of `labels`.
    static Partition from_labels(std::span<const Index> labels)
    {
        Partition p;
        p.canonicalize(labels);
        return p;
    }

    static Partition singletons(std::size_t n)
    {
        std::vector<Index> labels(n);
        std::iota(labels.begin(), labels.end(), Index{0});
        return from_labels(labels);
    }

    static Partition trivial(std::size_t n) { return from_labels(std::vector<Index>(n, 0)); }

    std::size_t size() const noexcept { return block_of_.size(); }
    std::size_t block_count() const noexcept { return blocks_.size(); }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    const Block& block(Index b) const { return blocks_.at(b); }
    Index block_of(Index w) const { return block_of_.at(w); }

    bool operator==(const Partition&) const = default;

private:
    static constexpr Index kUnassigned = static_cast<Index>(-1);

    Partition() = default;

    // Relabels blocks in order of first appearance, which is the order of
    // least elements.
    void canonicalize(std::span<const Index> labels)
    {
        std::unordered_map<Index, Index> remap;
        block_of_.assign(labels.size(), 0);
        blocks_.clear();
        for (Index w = 0; w < labels.size(); ++w) {
            auto [it, inserted] = remap.try_emplace(labels[w], blocks_.size());
            if (inserted) blocks_.emplace_back();
            const Index b = it->second;
            block_of_[w] = b;
            blocks_[b].push_back(w);
        }
    }

    std::vector<Block> blocks_;
    std::vector<Index> block_of_;
};

/// Outcomes carrying zero weight under every measure of a family.
class NullSet {
public:
    NullSet(std::size_t n, std::vector<Index> indices) : mask_(n, false)
    {
        for (Index w : indices) {
            if (w >= n) throw StructuralError("null index " + std::to_string(w) + " out of range");
            mask_[w] = true;
        }
    }

    static NullSet empty(std::size_t n) { return NullSet(n, {}); }

    std::size_t size() const noexcept { return mask_.size(); }
    bool contains(Index w) const { return mask_.at(w); }
    bool empty() const noexcept { return std::none_of(mask_.begin(), mask_.end(), [](bool b) { return b; }); }

    std::vector<Index> indices() const
    {
        std::vector<Index> out;
        for (Index w = 0; w < mask_.size(); ++w) {
            if (mask_[w]) out.push_back(w);
        }
        return out;
    }

    bool operator==(const NullSet&) const = default;

private:
    std::vector<bool> mask_;
};

namespace detail {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0)
    {
        std::iota(parent_.begin(), parent_.end(), Index{0});
    }

    Index find(Index x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(Index a, Index b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

private:
    std::vector<Index> parent_;
    std::vector<unsigned> rank_;
};

inline void require_same_size(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) {
        throw StructuralError(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                              std::to_string(b) + ")");
    }
}

} // namespace detail

/// Finest common coarsening; generates the intersection of the two fields.
inline Partition meet(const Partition& p1, const Partition& p2)
{
    detail::require_same_size(p1.size(), p2.size(), "meet");
    detail::DisjointSets sets(p1.size());
    for (const Partition* p : {&p1, &p2}) {
        for (const Block& b : p->blocks()) {
            for (Index w : b) sets.unite(b.front(), w);
        }
    }
    std::vector<Index> labels(p1.size());
    for (Index w = 0; w < labels.size(); ++w) labels[w] = sets.find(w);
    return Partition::from_labels(labels);
}

/// Common refinement; generates the field generated by the union.
inline Partition join(const Partition& p1, const Partition& p2)
{
    detail::require_same_size(p1.size(), p2.size(), "join");
    std::vector<Index> labels(p1.size());
    for (Index w = 0; w < labels.size(); ++w) {
        labels[w] = p1.block_of(w) * p2.block_count() + p2.block_of(w);
    }
    return Partition::from_labels(labels);
}

inline Partition meet(std::span<const Partition> parts)
{
    if (parts.empty()) throw StructuralError("meet of an empty list");
    Partition acc = parts.front();
    for (const auto& p : parts.subspan(1)) acc = meet(acc, p);
    return acc;
}

/// Partition generating sigma(p together with the null sets): null outcomes
/// become singletons, everything else keeps its block.
inline Partition completion(const Partition& p, const NullSet& nulls)
{
    detail::require_same_size(p.size(), nulls.size(), "completion");
    std::vector<Index> labels(p.size());
    for (Index w = 0; w < labels.size(); ++w) {
        labels[w] = nulls.contains(w) ? p.block_count() + w : p.block_of(w);
    }
    return Partition::from_labels(labels);
}

inline NullSet null_set(const MeasureFamily& mf)
{
    std::vector<Index> out;
    for (Index w = 0; w < mf.size(); ++w) {
        bool all_zero = true;
        for (Index g = 0; g < mf.count() && all_zero; ++g) all_zero = mf.row(g)[w] == 0.0;
        if (all_zero) out.push_back(w);
    }
    return NullSet(mf.size(), std::move(out));
}

/// True iff x is constant on every block of p, up to `tol` (exact by default).
inline bool is_measurable(const RandomVariable& x, const Partition& p, double tol = 0.0)
{
    detail::require_same_size(x.size(), p.size(), "is_measurable");
    for (const Block& b : p.blocks()) {
        const double first = x[b.front()];
        for (Index w : b) {
            if (std::abs(x[w] - first) > tol) return false;
        }
    }
    return true;
}

/// True iff every block of `fine` lies inside a block of `coarse`.
inline bool refines(const Partition& fine, const Partition& coarse)
{
    detail::require_same_size(fine.size(), coarse.size(), "refines");
    for (const Block& b : fine.blocks()) {
        const Index target = coarse.block_of(b.front());
        for (Index w : b) {
            if (coarse.block_of(w) != target) return false;
        }
    }
    return true;
}

/// The field contains every null set: each null outcome is its own block.
inline bool contains_null_sets(const Partition& p, const NullSet& nulls)
{
    return completion(p, nulls) == p;
}

} // namespace condexp
