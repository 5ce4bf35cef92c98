#pragma once

// Conditional expectation operators on a finite space as weighted
// block-averaging projections, and the alternating iterate engine.

#include "condexp/errors.hpp"
#include "condexp/rng.hpp"
#include "condexp/space.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace condexp {

/// L1 / L2 / Linf geometry of one weighting measure. Sup norms only look at
/// outcomes of positive weight.
class WeightedInnerProduct {
public:
    explicit WeightedInnerProduct(std::vector<double> measure) : measure_(std::move(measure)) {}

    std::size_t size() const noexcept { return measure_.size(); }
    std::span<const double> measure() const noexcept { return measure_; }

    double inner(const RandomVariable& x, const RandomVariable& y) const
    {
        check(x);
        check(y);
        double acc = 0.0;
        for (Index w = 0; w < measure_.size(); ++w) acc += measure_[w] * x[w] * y[w];
        return acc;
    }

    double norm1(const RandomVariable& x) const
    {
        check(x);
        double acc = 0.0;
        for (Index w = 0; w < measure_.size(); ++w) acc += measure_[w] * std::abs(x[w]);
        return acc;
    }

    double norm2_sq(const RandomVariable& x) const { return inner(x, x); }
    double norm2(const RandomVariable& x) const { return std::sqrt(norm2_sq(x)); }

    double norm_inf(const RandomVariable& x) const
    {
        check(x);
        double acc = 0.0;
        for (Index w = 0; w < measure_.size(); ++w) {
            if (measure_[w] > 0.0) acc = std::max(acc, std::abs(x[w]));
        }
        return acc;
    }

    /// ||x - y||_2^2 without forming the difference.
    double distance2_sq(const RandomVariable& x, const RandomVariable& y) const
    {
        check(x);
        check(y);
        double acc = 0.0;
        for (Index w = 0; w < measure_.size(); ++w) {
            const double d = x[w] - y[w];
            acc += measure_[w] * d * d;
        }
        return acc;
    }

    /// ||x - y||_inf over positive-weight outcomes.
    double sup_distance(const RandomVariable& x, const RandomVariable& y) const
    {
        check(x);
        check(y);
        double acc = 0.0;
        for (Index w = 0; w < measure_.size(); ++w) {
            if (measure_[w] > 0.0) acc = std::max(acc, std::abs(x[w] - y[w]));
        }
        return acc;
    }

private:
    void check(const RandomVariable& x) const
    {
        detail::require_same_size(x.size(), measure_.size(), "weighted inner product");
    }

    std::vector<double> measure_;
};

/// E[. | sigma(partition)] under one weighting measure. Blocks of zero mass
/// map to 0.
class CondExpOperator {
public:
    CondExpOperator(Partition partition, std::vector<double> measure)
        : partition_(std::move(partition)), geometry_(validated(std::move(measure), partition_.size()))
    {
        const auto p = geometry_.measure();
        block_mass_.assign(partition_.block_count(), 0.0);
        for (Index b = 0; b < partition_.block_count(); ++b) {
            for (Index w : partition_.block(b)) block_mass_[b] += p[w];
        }
    }

    CondExpOperator(Partition partition, const MeasureFamily& mf, Index gamma)
        : CondExpOperator(std::move(partition), std::vector<double>(mf.row(gamma).begin(), mf.row(gamma).end()))
    {
    }

    std::size_t size() const noexcept { return partition_.size(); }
    const Partition& partition() const noexcept { return partition_; }
    std::span<const double> measure() const noexcept { return geometry_.measure(); }
    const WeightedInnerProduct& geometry() const noexcept { return geometry_; }
    double block_mass(Index b) const { return block_mass_.at(b); }

    RandomVariable apply(const RandomVariable& x) const
    {
        detail::require_same_size(x.size(), size(), "apply");
        const auto p = measure();
        std::vector<double> out(size(), 0.0);
        for (Index b = 0; b < partition_.block_count(); ++b) {
            if (block_mass_[b] <= 0.0) continue;
            const auto& block = partition_.block(b);
            if (block.size() == 1) {
                out[block.front()] = x[block.front()];  // exact, no p x / p rounding
                continue;
            }
            double acc = 0.0;
            for (Index w : partition_.block(b)) acc += p[w] * x[w];
            const double mean = acc / block_mass_[b];
            for (Index w : partition_.block(b)) out[w] = mean;
        }
        return RandomVariable(std::move(out));
    }

    bool shares_measure_with(const CondExpOperator& other) const
    {
        return std::ranges::equal(measure(), other.measure());
    }

private:
    static std::vector<double> validated(std::vector<double> measure, std::size_t n)
    {
        detail::require_same_size(measure.size(), n, "conditional expectation measure");
        (void)MeasureFamily::single(measure);
        return measure;
    }

    Partition partition_;
    WeightedInnerProduct geometry_;
    std::vector<double> block_mass_;
};

inline RandomVariable apply(const CondExpOperator& op, const RandomVariable& x) { return op.apply(x); }

template <class Op>
concept LinearOperator = requires(const Op& op, const RandomVariable& x) {
    { op.apply(x) } -> std::same_as<RandomVariable>;
    { op.size() } -> std::convertible_to<std::size_t>;
};

/// Composition of conditional expectations; factors()[0] is applied first.
class OperatorProduct {
public:
    explicit OperatorProduct(std::vector<CondExpOperator> factors) : factors_(std::move(factors))
    {
        if (factors_.empty()) throw StructuralError("operator product needs at least one factor");
        for (const auto& f : factors_) {
            detail::require_same_size(f.size(), factors_.front().size(), "operator product");
        }
    }

    std::size_t size() const noexcept { return factors_.front().size(); }
    const std::vector<CondExpOperator>& factors() const noexcept { return factors_; }

    RandomVariable apply(const RandomVariable& x) const
    {
        RandomVariable y = x;
        for (const auto& f : factors_) y = f.apply(y);
        return y;
    }

private:
    std::vector<CondExpOperator> factors_;
};

/// T1 T2 T1: self-adjoint, positive, contractive in L1, L2 and Linf.
inline OperatorProduct sandwich(const CondExpOperator& t1, const CondExpOperator& t2)
{
    return OperatorProduct({t1, t2, t1});
}

namespace detail {

inline void require_shared_measure(std::span<const CondExpOperator> ops, const char* what)
{
    if (ops.empty()) throw StructuralError(std::string(what) + ": no operators given");
    for (Index i = 1; i < ops.size(); ++i) {
        require_same_size(ops[i].size(), ops.front().size(), what);
        if (!ops[i].shares_measure_with(ops.front())) {
            throw StructuralError(std::string(what) + ": operator " + std::to_string(i) +
                                  " uses a different weighting measure than operator 0");
        }
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Projection axioms

/// Worst violation seen for each axiom of a conditional expectation.
struct PropertyReport {
    double self_adjoint = 0.0;    // |<Tx,y> - <x,Ty>|
    double idempotent = 0.0;      // sup |T(Tx) - Tx|
    double contraction_l1 = 0.0;  // max(0, ||Tx||_1 - ||x||_1)
    double contraction_l2 = 0.0;
    double contraction_linf = 0.0;
    double orthogonality = 0.0;   // |<(I-T)x, Ty>|
    double block_averages = 0.0;  // |sum_B P Tx - sum_B P x| over blocks
    double measurability = 0.0;   // spread of Tx within a block
    std::size_t trials = 0;

    double worst() const
    {
        return std::max({self_adjoint, idempotent, contraction_l1, contraction_l2, contraction_linf,
                         orthogonality, block_averages, measurability});
    }
    bool within(double tol) const { return worst() <= tol; }
};

inline PropertyReport verify_projection_properties(const CondExpOperator& op, std::size_t trials, Rng& rng)
{
    if (trials == 0) throw StructuralError("verify_projection_properties: trials must be at least 1");
    const auto& g = op.geometry();
    const auto p = op.measure();
    const auto& part = op.partition();
    PropertyReport r;
    r.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const RandomVariable x(rng.uniform_vector(op.size(), -1.0, 1.0));
        const RandomVariable y(rng.uniform_vector(op.size(), -1.0, 1.0));
        const RandomVariable tx = op.apply(x);
        const RandomVariable ty = op.apply(y);
        const RandomVariable ttx = op.apply(tx);

        r.self_adjoint = std::max(r.self_adjoint, std::abs(g.inner(tx, y) - g.inner(x, ty)));
        for (Index w = 0; w < op.size(); ++w) {
            r.idempotent = std::max(r.idempotent, std::abs(ttx[w] - tx[w]));
        }
        r.contraction_l1 = std::max(r.contraction_l1, g.norm1(tx) - g.norm1(x));
        r.contraction_l2 = std::max(r.contraction_l2, g.norm2(tx) - g.norm2(x));
        r.contraction_linf = std::max(r.contraction_linf, g.norm_inf(tx) - g.norm_inf(x));

        std::vector<double> residual(op.size());
        for (Index w = 0; w < op.size(); ++w) residual[w] = x[w] - tx[w];
        r.orthogonality = std::max(r.orthogonality, std::abs(g.inner(RandomVariable(std::move(residual)), ty)));

        for (const Block& b : part.blocks()) {
            double lhs = 0.0;
            double rhs = 0.0;
            for (Index w : b) {
                lhs += p[w] * tx[w];
                rhs += p[w] * x[w];
                r.measurability = std::max(r.measurability, std::abs(tx[w] - tx[b.front()]));
            }
            r.block_averages = std::max(r.block_averages, std::abs(lhs - rhs));
        }
    }
    return r;
}

inline PropertyReport verify_projection_properties(const CondExpOperator& op, std::size_t trials,
                                                   std::uint64_t seed = 0)
{
    Rng rng(seed);
    return verify_projection_properties(op, trials, rng);
}

// ---------------------------------------------------------------------------
// Alternating iterates S_n = T_n ... T_1

/// Order in which operators are applied; repeated cyclically.
struct Schedule {
    std::vector<Index> order;

    static Schedule alternating(std::size_t operator_count)
    {
        Schedule s;
        for (Index i = 0; i < operator_count; ++i) s.order.push_back(i);
        return s;
    }

    /// Every operator has to appear at least once, otherwise the iterates
    /// never see it and the meet of all partitions is the wrong target.
    static Schedule custom(std::vector<Index> order) { return Schedule{std::move(order)}; }
};

/// Operator of E[. | meet of the null-completed partitions] under the
/// shared measure. This is the limit the alternating iterates must reach.
inline CondExpOperator direct_meet_operator(std::span<const CondExpOperator> ops)
{
    detail::require_shared_measure(ops, "direct_meet_operator");
    const auto p = ops.front().measure();
    std::vector<Index> zero;
    for (Index w = 0; w < p.size(); ++w) {
        if (p[w] == 0.0) zero.push_back(w);
    }
    const NullSet nulls(p.size(), std::move(zero));
    Partition acc = completion(ops.front().partition(), nulls);
    for (const auto& op : ops.subspan(1)) acc = meet(acc, completion(op.partition(), nulls));
    return CondExpOperator(std::move(acc), std::vector<double>(p.begin(), p.end()));
}

struct IterateOptions {
    double tol = 1e-10;
    std::size_t max_iter = 10'000;
};

struct IterationReport {
    std::vector<RandomVariable> trajectory;  // S_1 x .. S_N x
    std::vector<double> norms2;              // ||S_k x||^2
    std::vector<double> diffs2;              // ||S_k x - S_{k+1} x||^2, length N-1
    std::vector<double> sup_residuals;       // ||S_k x - Q x||_inf
    RandomVariable limit;                    // last iterate
    RandomVariable target;                   // Q x from the direct meet operator
    std::size_t iterations_used = 0;
    bool converged = false;
    double residual = 0.0;                   // ||limit - Q x||_inf
};

/// Runs the iterates until a step moves by at most `tol` (sup norm on
/// positive-weight outcomes) and the iterate is within `tol` of the directly
/// computed meet projection, or until `max_iter` steps.
inline IterationReport iterate(std::span<const CondExpOperator> ops, const Schedule& schedule,
                               const RandomVariable& x, const IterateOptions& options = {})
{
    detail::require_shared_measure(ops, "iterate");
    detail::require_same_size(x.size(), ops.front().size(), "iterate");
    if (!(options.tol > 0.0)) throw StructuralError("iterate: tol must be positive");
    if (options.max_iter == 0) throw StructuralError("iterate: max_iter must be at least 1");
    if (schedule.order.empty()) throw StructuralError("iterate: empty schedule");
    std::vector<bool> used(ops.size(), false);
    for (Index i : schedule.order) {
        if (i >= ops.size()) {
            throw StructuralError("iterate: schedule refers to operator " + std::to_string(i) + " but only " +
                                  std::to_string(ops.size()) + " were given");
        }
        used[i] = true;
    }
    for (Index i = 0; i < used.size(); ++i) {
        if (!used[i]) throw StructuralError("iterate: schedule never applies operator " + std::to_string(i));
    }

    const auto& g = ops.front().geometry();
    IterationReport r;
    r.target = direct_meet_operator(ops).apply(x);

    RandomVariable prev = x;
    for (std::size_t k = 0; k < options.max_iter; ++k) {
        const auto& op = ops[schedule.order[k % schedule.order.size()]];
        RandomVariable cur = op.apply(prev);
        const double step = g.sup_distance(cur, prev);
        const double resid = g.sup_distance(cur, r.target);
        r.norms2.push_back(g.norm2_sq(cur));
        r.sup_residuals.push_back(resid);
        if (!r.trajectory.empty()) r.diffs2.push_back(g.distance2_sq(r.trajectory.back(), cur));
        r.trajectory.push_back(cur);
        prev = std::move(cur);
        if (step <= options.tol && resid <= options.tol) {
            r.converged = true;
            break;
        }
    }
    r.iterations_used = r.trajectory.size();
    r.limit = r.trajectory.back();
    r.residual = r.sup_residuals.back();
    return r;
}

inline IterationReport iterate(const std::vector<CondExpOperator>& ops, const Schedule& schedule,
                               const RandomVariable& x, const IterateOptions& options = {})
{
    return iterate(std::span<const CondExpOperator>(ops), schedule, x, options);
}

/// Largest deviation from ||S_k - S_{k+1}||^2 = ||S_k||^2 - ||S_{k+1}||^2,
/// relative to max(1, ||S_1||^2).
inline double telescoping_defect(const IterationReport& r)
{
    if (r.norms2.empty()) return 0.0;
    const double scale = std::max(1.0, r.norms2.front());
    double worst = 0.0;
    for (Index k = 0; k < r.diffs2.size(); ++k) {
        worst = std::max(worst, std::abs(r.diffs2[k] - (r.norms2[k] - r.norms2[k + 1])) / scale);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Sum bound for a self-adjoint contraction

struct SumBoundReport {
    std::vector<double> terms;                 // ||T^n x - T^{n+2} x||^2, n = 1..N
    std::vector<double> partial_sums;          // running sum of terms
    std::vector<double> weighted_partial_sums; // running sum of n * terms
    double x_norm2_sq = 0.0;
    double tx_norm2_sq = 0.0;
    double limit_norm2_sq = 0.0;               // ||Q x||^2

    /// ||x||^2 - sum of terms; the bound asks for this to be >= 0.
    double bound_margin() const { return x_norm2_sq - (partial_sums.empty() ? 0.0 : partial_sums.back()); }
    bool bound_holds(double slack = 1e-10) const { return bound_margin() >= -slack; }

    /// |sum n * terms - (||Tx||^2 - ||Qx||^2)| at the final N.
    double weighted_residual() const
    {
        const double s = weighted_partial_sums.empty() ? 0.0 : weighted_partial_sums.back();
        return std::abs(s - (tx_norm2_sq - limit_norm2_sq));
    }
};

/// Generic form: `limit` is the L2 limit of T^n x, supplied by the caller.
template <LinearOperator Op>
SumBoundReport sum_bound_ledger(const Op& op, const WeightedInnerProduct& g, const RandomVariable& x,
                                const RandomVariable& limit, std::size_t count)
{
    if (count == 0) throw StructuralError("sum bound ledger: N must be at least 1");
    SumBoundReport r;
    r.x_norm2_sq = g.norm2_sq(x);
    r.limit_norm2_sq = g.norm2_sq(limit);

    // powers[j] = T^{n+j} x for the current n
    std::vector<RandomVariable> powers{op.apply(x)};
    r.tx_norm2_sq = g.norm2_sq(powers[0]);
    powers.push_back(op.apply(powers[0]));
    powers.push_back(op.apply(powers[1]));
    double sum = 0.0;
    double weighted = 0.0;
    for (std::size_t n = 1; n <= count; ++n) {
        const double term = g.distance2_sq(powers[0], powers[2]);
        sum += term;
        weighted += static_cast<double>(n) * term;
        r.terms.push_back(term);
        r.partial_sums.push_back(sum);
        r.weighted_partial_sums.push_back(weighted);
        powers[0] = std::move(powers[1]);
        powers[1] = std::move(powers[2]);
        powers[2] = op.apply(powers[1]);
    }
    return r;
}

/// Ledger for T = T1 T2 T1 with the limit taken from the direct meet operator.
inline SumBoundReport lemma33_ledger(const CondExpOperator& t1, const CondExpOperator& t2,
                                     const RandomVariable& x, std::size_t count)
{
    const std::vector<CondExpOperator> pair{t1, t2};
    const auto q = direct_meet_operator(pair);
    return sum_bound_ledger(sandwich(t1, t2), t1.geometry(), x, q.apply(x), count);
}

// ---------------------------------------------------------------------------
// Dyadic averages of even powers

inline constexpr std::size_t kMaxDyadicLevel = 20;

struct DyadicTrajectory {
    std::vector<RandomVariable> averages;  // b_n = 2^-n sum_{k=1..2^n} T^{2k} x
    std::vector<RandomVariable> powers;    // T^{2 * 2^n} x, the last term of b_n
};

template <LinearOperator Op>
DyadicTrajectory dyadic_average_trajectory(const Op& op, const RandomVariable& x, std::size_t n_max)
{
    if (n_max > kMaxDyadicLevel) {
        throw StructuralError("dyadic_average_trajectory: n_max " + std::to_string(n_max) + " exceeds cap " +
                              std::to_string(kMaxDyadicLevel));
    }
    detail::require_same_size(x.size(), op.size(), "dyadic_average_trajectory");
    DyadicTrajectory out;
    RandomVariable power = x;
    std::vector<double> sum(x.size(), 0.0);
    std::size_t next_level = 0;
    const std::size_t last = std::size_t{1} << n_max;
    for (std::size_t k = 1; k <= last; ++k) {
        power = op.apply(op.apply(power));
        for (Index w = 0; w < sum.size(); ++w) sum[w] += power[w];
        if (k == (std::size_t{1} << next_level)) {
            std::vector<double> avg(sum);
            for (double& v : avg) v /= static_cast<double>(k);
            out.averages.emplace_back(std::move(avg));
            out.powers.push_back(power);
            ++next_level;
        }
    }
    return out;
}

} // namespace condexp
