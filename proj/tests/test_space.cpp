#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace condexp;
using condexp::testing::join_by_intersections;
using condexp::testing::meet_by_components;
using condexp::testing::random_partition;
using condexp::testing::sigma_field;
using condexp::testing::sigma_field_with_nulls;

namespace {

Partition P(std::size_t n, std::vector<Block> blocks) { return Partition(n, std::move(blocks)); }

} // namespace

TEST(OutcomeSpace, RejectsEmptyAndDuplicates)
{
    EXPECT_THROW(OutcomeSpace(std::vector<std::string>{}), StructuralError);
    EXPECT_THROW(OutcomeSpace({"a", "b", "a"}), StructuralError);
    EXPECT_EQ(OutcomeSpace::indexed(3).size(), 3u);
}

TEST(MeasureFamily, ValidatesRows)
{
    EXPECT_NO_THROW(MeasureFamily({{0.5, 0.5}, {1.0, 0.0}}));
    EXPECT_THROW(MeasureFamily(std::vector<std::vector<double>>{}), StructuralError);
    EXPECT_THROW(MeasureFamily({{0.5, 0.6}}), StructuralError);
    EXPECT_THROW(MeasureFamily({{1.5, -0.5}}), StructuralError);
    EXPECT_THROW(MeasureFamily({{0.5, 0.5}, {1.0}}), StructuralError);
    // within the 1e-12 row-sum tolerance, not renormalized
    const MeasureFamily mf({{0.5, 0.5 + 5e-13}});
    EXPECT_EQ(mf.row(0)[1], 0.5 + 5e-13);
}

TEST(RandomVariable, RejectsNonFinite)
{
    EXPECT_THROW(RandomVariable({1.0, std::numeric_limits<double>::infinity()}), StructuralError);
    EXPECT_THROW(RandomVariable({std::nan("")}), StructuralError);
}

TEST(Partition, ValidatesBlocks)
{
    EXPECT_THROW(P(3, {{0, 1}, {1, 2}}), StructuralError);  // overlap
    EXPECT_THROW(P(3, {{0, 1}}), StructuralError);          // not covering
    EXPECT_THROW(P(3, {{0, 1}, {}, {2}}), StructuralError); // empty block
    EXPECT_THROW(P(3, {{0, 1, 3}, {2}}), StructuralError);  // out of range
    try {
        P(3, {{0, 1}, {1, 2}});
    } catch (const StructuralError& e) {
        EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
    }
}

TEST(Partition, CanonicalOrderMakesEqualityStructural)
{
    EXPECT_EQ(P(4, {{3, 1}, {2, 0}}), P(4, {{0, 2}, {1, 3}}));
    EXPECT_EQ(P(4, {{3, 1}, {2, 0}}).block(0), (Block{0, 2}));
    const std::vector<Index> labels{7, 3, 7, 3};
    EXPECT_EQ(Partition::from_labels(labels), P(4, {{0, 2}, {1, 3}}));
}

TEST(Meet, Examples)
{
    const auto a = P(4, {{0, 1}, {2, 3}});
    const auto b = P(4, {{0, 2}, {1, 3}});
    EXPECT_EQ(meet(a, a), a);
    const auto whole = P(4, {{0, 1, 2, 3}});
    EXPECT_EQ(meet_by_components(a, b), whole);
    EXPECT_EQ(meet(a, b), whole);
    EXPECT_EQ(meet(Partition::singletons(3), Partition::trivial(3)), Partition::trivial(3));
}

TEST(Meet, SizeMismatchIsStructural)
{
    EXPECT_THROW(meet(Partition::trivial(3), Partition::trivial(4)), StructuralError);
    EXPECT_THROW(join(Partition::trivial(3), Partition::trivial(4)), StructuralError);
}

TEST(Join, Examples)
{
    const auto a = P(4, {{0, 1}, {2, 3}});
    const auto b = P(4, {{0, 2}, {1, 3}});
    EXPECT_EQ(join_by_intersections(a, b), Partition::singletons(4));
    EXPECT_EQ(join(a, b), Partition::singletons(4));
    EXPECT_EQ(join(a, Partition::singletons(4)), Partition::singletons(4));
    EXPECT_EQ(join(a, a), a);
}

TEST(Completion, Examples)
{
    const auto a = P(4, {{0, 1}, {2, 3}});
    EXPECT_EQ(completion(a, NullSet::empty(4)), a);

    const auto whole = P(2, {{0, 1}});
    const NullSet one(2, {1});
    const auto c = completion(whole, one);
    EXPECT_EQ(c, Partition::singletons(2));
    // same field as sigma(p u nulls), by enumeration
    EXPECT_EQ(sigma_field(c), sigma_field_with_nulls(whole, {1}));

    EXPECT_EQ(completion(Partition::singletons(5), NullSet(5, {0, 3})), Partition::singletons(5));
}

TEST(Completion, GeneratesFieldWithNullSets)
{
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.below(10);
        const auto p = random_partition(n, rng);
        std::vector<Index> nulls;
        for (Index w = 0; w < n; ++w) {
            if (rng.unit() < 0.3) nulls.push_back(w);
        }
        const NullSet ns(n, nulls);
        const auto c = completion(p, ns);
        EXPECT_EQ(sigma_field(c), sigma_field_with_nulls(p, nulls));
        EXPECT_EQ(completion(c, ns), c);
        EXPECT_TRUE(contains_null_sets(c, ns));
    }
}

TEST(NullSet, Examples)
{
    EXPECT_TRUE(null_set(MeasureFamily({{0.25, 0.25, 0.5}})).empty());
    EXPECT_TRUE(null_set(MeasureFamily({{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}})).empty());
    const auto ns = null_set(MeasureFamily({{0.5, 0.5, 0.0}, {0.5, 0.5, 0.0}}));
    EXPECT_EQ(ns.indices(), (std::vector<Index>{2}));
}

TEST(IsMeasurable, Examples)
{
    const auto a = P(4, {{0, 1}, {2, 3}});
    const auto b = P(4, {{0, 2}, {1, 3}});
    EXPECT_TRUE(is_measurable(RandomVariable::constant(4, 3.0), a));
    EXPECT_TRUE(is_measurable(RandomVariable{1, 2, 1, 2}, b));
    EXPECT_FALSE(is_measurable(RandomVariable{1, 2, 1, 2}, a));
    EXPECT_TRUE(is_measurable(RandomVariable{1, 1 + 1e-14, 2, 2}, a, 1e-12));
    EXPECT_FALSE(is_measurable(RandomVariable{1, 1 + 1e-14, 2, 2}, a));
}

TEST(Lattice, LawsOnRandomPartitions)
{
    Rng rng(5);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng.below(16);
        const auto p = random_partition(n, rng);
        const auto q = random_partition(n, rng);
        const auto r = random_partition(n, rng);
        EXPECT_EQ(meet(p, q), meet_by_components(p, q));
        EXPECT_EQ(join(p, q), join_by_intersections(p, q));
        EXPECT_EQ(meet(p, q), meet(q, p));
        EXPECT_EQ(join(p, q), join(q, p));
        EXPECT_EQ(meet(meet(p, q), r), meet(p, meet(q, r)));
        EXPECT_EQ(join(join(p, q), r), join(p, join(q, r)));
        EXPECT_EQ(meet(p, p), p);
        EXPECT_EQ(join(p, p), p);
        EXPECT_EQ(meet(p, join(p, q)), p);
        EXPECT_EQ(join(p, meet(p, q)), p);
        EXPECT_TRUE(refines(p, meet(p, q)));
        EXPECT_TRUE(refines(q, meet(p, q)));
        EXPECT_TRUE(refines(join(p, q), p));
        EXPECT_TRUE(refines(join(p, q), q));
        // field of the meet is the intersection of the fields
        if (n <= 10) {
            std::set<std::uint32_t> both;
            const auto fp = sigma_field(p);
            const auto fq = sigma_field(q);
            std::set_intersection(fp.begin(), fp.end(), fq.begin(), fq.end(), std::inserter(both, both.begin()));
            EXPECT_EQ(sigma_field(meet(p, q)), both);
        }
    }
}

TEST(Lattice, MeasurabilityPassesToRefinements)
{
    Rng rng(6);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.below(12);
        const auto p = random_partition(n, rng);
        std::vector<double> v(n);
        for (Index w = 0; w < n; ++w) v[w] = static_cast<double>(p.block_of(w)) * 0.5;
        const RandomVariable x(v);
        ASSERT_TRUE(is_measurable(x, p));
        const auto q = join(p, random_partition(n, rng));
        EXPECT_TRUE(is_measurable(x, q));
    }
}
