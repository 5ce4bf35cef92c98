#pragma once

// Sufficiency of a partition for a finite family of measures.
//
// A partition p is sufficient iff on every block B the conditional weights
// P_g(. | B) coincide for every measure g with P_g(B) > 0. Measures giving B
// zero mass impose no constraint there; their defining equality reads 0 = 0.

#include "condexp/operators.hpp"
#include "condexp/report.hpp"
#include "condexp/space.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace condexp {

/// Absolute agreement tolerance between conditional weights or means.
inline constexpr double kSufficiencyTolerance = 1e-10;
/// Allowed divergence between per-measure replays of the iterates.
inline constexpr double kReplayTolerance = 1e-9;

struct SufficiencyWitness {
    Index gamma = 0;                    // measure that disagrees
    Index other_gamma = 0;              // measure it is compared against
    Index block = 0;
    std::optional<Index> outcome;       // test function is the indicator of this outcome
    double discrepancy = 0.0;           // difference of conditional means

    std::string describe() const
    {
        std::string s = "measures " + std::to_string(other_gamma) + " and " + std::to_string(gamma) +
                        " disagree on block " + std::to_string(block);
        if (outcome) s += " for f = indicator of outcome " + std::to_string(*outcome);
        return s + " (difference " + std::to_string(discrepancy) + ")";
    }
};

struct SufficiencyCertificate {
    bool sufficient = false;
    std::optional<RandomVariable> g;    // common conditional mean of the checked f
    std::optional<SufficiencyWitness> witness;
};

namespace detail {

inline double block_mass(std::span<const double> p, const Block& b)
{
    double m = 0.0;
    for (Index w : b) m += p[w];
    return m;
}

inline double block_integral(std::span<const double> p, const Block& b, const RandomVariable& f)
{
    double acc = 0.0;
    for (Index w : b) acc += p[w] * f[w];
    return acc;
}

} // namespace detail

/// Per block, the one-unknown system g(B) P_g(B) = sum_B P_g f over all g.
inline SufficiencyCertificate check_sufficient_for_f(const MeasureFamily& mf, const Partition& p,
                                                     const RandomVariable& f)
{
    detail::require_same_size(mf.size(), p.size(), "check_sufficient_for_f");
    detail::require_same_size(f.size(), p.size(), "check_sufficient_for_f");
    double scale = 1.0;
    for (double v : f.values()) scale = std::max(scale, std::abs(v));
    const double tol = kSufficiencyTolerance * scale;

    SufficiencyCertificate cert;
    std::vector<double> g(p.size(), 0.0);
    for (Index b = 0; b < p.block_count(); ++b) {
        const Block& block = p.block(b);
        std::optional<Index> ref;
        double ref_mean = 0.0;
        for (Index gamma = 0; gamma < mf.count(); ++gamma) {
            const auto row = mf.row(gamma);
            const double mass = detail::block_mass(row, block);
            if (mass <= 0.0) continue;
            const double mean = detail::block_integral(row, block, f) / mass;
            if (!ref) {
                ref = gamma;
                ref_mean = mean;
            } else if (std::abs(mean - ref_mean) > tol) {
                cert.witness = SufficiencyWitness{gamma, *ref, b, std::nullopt, std::abs(mean - ref_mean)};
                return cert;
            }
        }
        for (Index w : block) g[w] = ref ? ref_mean : 0.0;
    }
    cert.sufficient = true;
    cert.g = RandomVariable(std::move(g));
    return cert;
}

/// Distributional criterion; when `f` is given and p is sufficient the
/// certificate also carries the common conditional mean of f.
inline SufficiencyCertificate check_sufficient(const MeasureFamily& mf, const Partition& p,
                                               const std::optional<RandomVariable>& f = std::nullopt)
{
    detail::require_same_size(mf.size(), p.size(), "check_sufficient");
    SufficiencyCertificate cert;
    for (Index b = 0; b < p.block_count(); ++b) {
        const Block& block = p.block(b);
        std::optional<Index> ref;
        double ref_mass = 0.0;
        std::optional<SufficiencyWitness> worst;
        for (Index gamma = 0; gamma < mf.count(); ++gamma) {
            const auto row = mf.row(gamma);
            const double mass = detail::block_mass(row, block);
            if (mass <= 0.0) continue;
            if (!ref) {
                ref = gamma;
                ref_mass = mass;
                continue;
            }
            const auto ref_row = mf.row(*ref);
            for (Index w : block) {
                const double d = std::abs(row[w] / mass - ref_row[w] / ref_mass);
                if (d > kSufficiencyTolerance && (!worst || d > worst->discrepancy)) {
                    worst = SufficiencyWitness{gamma, *ref, b, w, d};
                }
            }
        }
        if (worst) {
            cert.witness = worst;
            return cert;
        }
    }
    cert.sufficient = true;
    if (f) cert.g = check_sufficient_for_f(mf, p, *f).g;
    return cert;
}

/// |sum_B P_g f - g_ref(B) P_g(B)| for the witness' measure and test function,
/// with g_ref the conditional mean under the comparison measure.
inline double witness_violation(const MeasureFamily& mf, const Partition& p, const SufficiencyWitness& w)
{
    const Block& block = p.block(w.block);
    const auto row = mf.row(w.gamma);
    const auto ref = mf.row(w.other_gamma);
    const RandomVariable f = w.outcome ? RandomVariable::indicator(p.size(), *w.outcome)
                                       : RandomVariable::constant(p.size(), 1.0);
    const double ref_mean = detail::block_integral(ref, block, f) / detail::block_mass(ref, block);
    return std::abs(detail::block_integral(row, block, f) - ref_mean * detail::block_mass(row, block));
}

/// Indicators of every outcome; by linearity they settle any statement that
/// has to hold for all f.
inline std::vector<RandomVariable> indicator_basis(std::size_t n)
{
    std::vector<RandomVariable> out;
    out.reserve(n);
    for (Index w = 0; w < n; ++w) out.push_back(RandomVariable::indicator(n, w));
    return out;
}

// ---------------------------------------------------------------------------
// Intersection theorems as executable suites

struct SuiteOptions {
    IterateOptions iterate{};
};

namespace detail {

// Agreement of x and y on outcomes of positive P_g weight.
inline double positive_sup_distance(std::span<const double> p, const RandomVariable& x, const RandomVariable& y)
{
    double d = 0.0;
    for (Index w = 0; w < p.size(); ++w) {
        if (p[w] > 0.0) d = std::max(d, std::abs(x[w] - y[w]));
    }
    return d;
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

// Measurability up to null outcomes: x is constant on the positive-weight
// part of every block.
inline bool measurable_almost_surely(const RandomVariable& x, const Partition& p, std::span<const double> weight,
                                     double tol)
{
    for (const Block& b : p.blocks()) {
        std::optional<double> value;
        for (Index w : b) {
            if (weight[w] <= 0.0) continue;
            if (!value) value = x[w];
            else if (std::abs(x[w] - *value) > tol) return false;
        }
    }
    return true;
}

inline bool require_sufficient(SuiteReport& r, const MeasureFamily& mf, const Partition& p, std::size_t position,
                               const std::string& what)
{
    const auto cert = check_sufficient(mf, p);
    if (!cert.sufficient) {
        r.hypothesis_not_met(what + " " + std::to_string(position) + " is not sufficient: " + cert.witness->describe(),
                             position);
        return false;
    }
    return true;
}

} // namespace detail

/// Replays the alternating-iterate proof that meet(p1, p2) is sufficient when
/// both are sufficient and one of them contains the family's null sets.
///
/// The common version g_n is produced by iterating under the equal-weight
/// mixture of the family (for a sufficient partition its conditional weights
/// are the shared ones); each measure's own iterates must agree with it
/// almost surely, and the limit must be meet-measurable and equal to the
/// common conditional mean given the meet.
inline SuiteReport intersection_sufficiency_suite(const MeasureFamily& mf, const Partition& p1, const Partition& p2,
                                                  std::span<const RandomVariable> test_functions,
                                                  const SuiteOptions& options = {})
{
    detail::require_same_size(p1.size(), mf.size(), "intersection suite");
    detail::require_same_size(p2.size(), mf.size(), "intersection suite");
    SuiteReport r;
    if (!detail::require_sufficient(r, mf, p1, 1, "partition")) return r;
    if (!detail::require_sufficient(r, mf, p2, 2, "partition")) return r;
    const NullSet nulls = null_set(mf);
    const bool n_in_1 = contains_null_sets(p1, nulls);
    const bool n_in_2 = contains_null_sets(p2, nulls);
    if (!n_in_1 && !n_in_2) {
        r.hypothesis_not_met("neither partition contains the null sets of the family");
        return r;
    }
    r.note(std::string("null sets contained in partition ") + (n_in_2 ? "2" : "1"));

    const Partition m = meet(p1, p2);
    r.result = m;
    const auto cert = check_sufficient(mf, m);
    if (!cert.sufficient) {
        r.fail("meet is not sufficient: " + cert.witness->describe());
        return r;
    }
    r.note("meet has " + std::to_string(m.block_count()) + " blocks and is sufficient");

    const auto mixture = mf.mixture();
    const std::vector<CondExpOperator> common{CondExpOperator(p1, mixture), CondExpOperator(p2, mixture)};
    const auto schedule = Schedule::alternating(2);
    for (Index fi = 0; fi < test_functions.size(); ++fi) {
        const RandomVariable& f = test_functions[fi];
        const auto shared = iterate(common, schedule, f, options.iterate);
        if (!shared.converged) {
            r.fail("common iterates did not converge for test function " + std::to_string(fi));
            continue;
        }
        const RandomVariable& g = shared.limit;
        if (!detail::measurable_almost_surely(g, m, mixture, kReplayTolerance)) {
            r.fail("common limit is not meet-measurable for test function " + std::to_string(fi));
        }
        const auto direct = check_sufficient_for_f(mf, m, f);
        for (Index gamma = 0; gamma < mf.count(); ++gamma) {
            const auto row = mf.row(gamma);
            const std::vector<CondExpOperator> own{CondExpOperator(p1, mf, gamma), CondExpOperator(p2, mf, gamma)};
            const auto mine = iterate(own, schedule, f, options.iterate);
            double divergence = 0.0;
            const std::size_t steps = std::min(mine.trajectory.size(), shared.trajectory.size());
            for (Index k = 0; k < steps; ++k) {
                divergence = std::max(divergence,
                                      detail::positive_sup_distance(row, mine.trajectory[k], shared.trajectory[k]));
            }
            divergence = std::max(divergence, detail::positive_sup_distance(row, mine.limit, g));
            r.observe(divergence);
            if (divergence > kReplayTolerance) {
                r.hypothesis_not_met("iterates under measure " + std::to_string(gamma) +
                                     " diverge from the common version by " + std::to_string(divergence));
                return r;
            }
            const double gap = detail::positive_sup_distance(row, g, *direct.g);
            r.observe(gap);
            if (gap > kReplayTolerance) {
                r.fail("limit differs from the conditional mean given the meet under measure " +
                       std::to_string(gamma) + " by " + std::to_string(gap));
            }
        }
    }
    if (r.passed()) {
        r.note("replayed " + std::to_string(test_functions.size()) + " test functions under " +
               std::to_string(mf.count()) + " measures; max discrepancy " + std::to_string(r.max_violation));
    }
    return r;
}

inline SuiteReport intersection_sufficiency_suite(const MeasureFamily& mf, const Partition& p1, const Partition& p2,
                                                  const SuiteOptions& options = {})
{
    const auto basis = indicator_basis(mf.size());
    return intersection_sufficiency_suite(mf, p1, p2, basis, options);
}

/// A decreasing chain of sufficient partitions stabilizes on a finite space;
/// the stable partition is the meet and it is sufficient.
inline SuiteReport decreasing_chain_suite(const MeasureFamily& mf, std::span<const Partition> chain,
                                          std::span<const RandomVariable> test_functions)
{
    if (chain.empty()) throw StructuralError("decreasing chain suite: empty chain");
    for (const auto& p : chain) detail::require_same_size(p.size(), mf.size(), "decreasing chain suite");
    for (Index i = 0; i + 1 < chain.size(); ++i) {
        if (!refines(chain[i], chain[i + 1])) {
            throw StructuralError("chain is not decreasing: partition " + std::to_string(i + 2) +
                                  " is not coarser than partition " + std::to_string(i + 1));
        }
    }
    SuiteReport r;
    for (Index i = 0; i < chain.size(); ++i) {
        if (!detail::require_sufficient(r, mf, chain[i], i + 1, "chain partition")) return r;
    }

    std::size_t stable = chain.size() - 1;
    while (stable > 0 && chain[stable - 1] == chain.back()) --stable;
    r.note("chain stabilizes at position " + std::to_string(stable + 1));

    const Partition m = meet(chain);
    r.result = m;
    if (!(m == chain.back())) r.fail("meet of the chain differs from its stable partition");
    const auto cert = check_sufficient(mf, m);
    if (!cert.sufficient) {
        r.fail("meet is not sufficient: " + cert.witness->describe());
        return r;
    }

    for (Index fi = 0; fi < test_functions.size(); ++fi) {
        const RandomVariable& f = test_functions[fi];
        const RandomVariable limit = *check_sufficient_for_f(mf, m, f).g;
        for (Index i = 0; i < chain.size(); ++i) {
            const RandomVariable g_i = *check_sufficient_for_f(mf, chain[i], f).g;
            for (Index gamma = 0; gamma < mf.count(); ++gamma) {
                const RandomVariable own = CondExpOperator(chain[i], mf, gamma).apply(f);
                const double d = detail::positive_sup_distance(mf.row(gamma), own, g_i);
                r.observe(d);
                if (d > kReplayTolerance) {
                    r.fail("E_g[f | chain partition " + std::to_string(i + 1) + "] under measure " +
                           std::to_string(gamma) + " differs from the common version by " + std::to_string(d));
                }
            }
            if (i >= stable) {
                double d = 0.0;
                for (Index w = 0; w < f.size(); ++w) d = std::max(d, std::abs(g_i[w] - limit[w]));
                r.observe(d);
                if (d > kReplayTolerance) {
                    r.fail("g_n has not stabilized at chain position " + std::to_string(i + 1));
                }
            }
        }
    }
    return r;
}

inline SuiteReport decreasing_chain_suite(const MeasureFamily& mf, std::span<const Partition> chain)
{
    const auto basis = indicator_basis(mf.size());
    return decreasing_chain_suite(mf, chain, basis);
}

/// Folds the pairwise suite over the running meets H_k = G_1 ^ ... ^ G_k and
/// finishes with the decreasing-chain suite on H_1 >= H_2 >= ...
inline SuiteReport countable_intersection_suite(const MeasureFamily& mf, std::span<const Partition> parts,
                                                std::span<const RandomVariable> test_functions,
                                                const SuiteOptions& options = {})
{
    if (parts.empty()) throw StructuralError("countable intersection suite: no partitions");
    SuiteReport r;
    const NullSet nulls = null_set(mf);
    for (Index i = 0; i < parts.size(); ++i) {
        detail::require_same_size(parts[i].size(), mf.size(), "countable intersection suite");
        if (!detail::require_sufficient(r, mf, parts[i], i + 1, "partition")) return r;
        if (!contains_null_sets(parts[i], nulls)) {
            r.hypothesis_not_met("partition " + std::to_string(i + 1) + " does not contain the null sets", i + 1);
            return r;
        }
    }

    std::vector<Partition> running{parts.front()};
    for (Index i = 1; i < parts.size(); ++i) {
        auto step = intersection_sufficiency_suite(mf, running.back(), parts[i], test_functions, options);
        r.observe(step.max_violation);
        if (!step.passed()) {
            r.verdict = step.verdict;
            r.position = i + 1;
            r.note("pairwise step at partition " + std::to_string(i + 1) + " did not pass");
            for (auto& n : step.notes) r.notes.push_back(std::move(n));
            return r;
        }
        running.push_back(*step.result);
    }
    r.note("pairwise fold produced " + std::to_string(running.size()) + " running meets");

    auto chain = decreasing_chain_suite(mf, running, test_functions);
    r.observe(chain.max_violation);
    for (auto& n : chain.notes) r.notes.push_back(std::move(n));
    if (!chain.passed()) {
        r.verdict = chain.verdict;
        return r;
    }
    r.result = chain.result;
    if (!(*r.result == meet(parts))) r.fail("final running meet differs from the meet of all partitions");
    return r;
}

inline SuiteReport countable_intersection_suite(const MeasureFamily& mf, std::span<const Partition> parts,
                                                const SuiteOptions& options = {})
{
    const auto basis = indicator_basis(mf.size());
    return countable_intersection_suite(mf, parts, basis, options);
}

} // namespace condexp
