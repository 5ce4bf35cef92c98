#pragma once

// Finite-prefix checks for convex sequences and dyadic averages.
//
// Sequences are stored 1-based in the mathematical sense: values()[0] is a_1.
// The optional limit is the declared lim a_n (for the dyadic bound it plays
// the role of a_0).

#include "condexp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace condexp {

class RealSequence {
public:
    explicit RealSequence(std::vector<double> values, std::optional<double> limit = std::nullopt)
        : values_(std::move(values)), limit_(limit)
    {
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw StructuralError("sequence entry a_" + std::to_string(i + 1) + " is not finite");
            }
        }
        if (limit_ && !std::isfinite(*limit_)) throw StructuralError("declared limit is not finite");
    }

    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<double>& values() const noexcept { return values_; }
    std::optional<double> limit() const noexcept { return limit_; }

    /// a_n for 1 <= n <= size().
    double at(std::size_t n) const { return values_.at(n - 1); }

private:
    std::vector<double> values_;
    std::optional<double> limit_;
};

/// Delta^2 a_n = a_{n+2} - 2 a_{n+1} + a_n, n = 1..N-2.
inline RealSequence second_difference(const RealSequence& s)
{
    if (s.size() < 3) {
        throw StructuralError("second difference needs at least 3 terms, got " + std::to_string(s.size()));
    }
    const auto& a = s.values();
    std::vector<double> out(a.size() - 2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i + 2] - 2.0 * a[i + 1] + a[i];
    return RealSequence(std::move(out));
}

namespace detail {

// 1-based index of the first second difference below -tol, if any.
inline std::optional<std::size_t> first_convexity_violation(const RealSequence& s, double tol)
{
    const auto d2 = second_difference(s);
    for (std::size_t i = 0; i < d2.size(); ++i) {
        if (d2.values()[i] < -tol) return i + 1;
    }
    return std::nullopt;
}

} // namespace detail

inline bool is_convex(const RealSequence& s, double tol)
{
    return !detail::first_convexity_violation(s, tol).has_value();
}

struct ConvexSumReport {
    double target = 0.0;                 // a_1 - L
    std::vector<double> partial_sums;    // P_M = sum_{n<=M} n Delta^2 a_n, M = 1..N-2
    std::vector<double> residuals;       // |P_M - target|
    double final_residual = 0.0;
    double tail_allowance = 0.0;         // |a_N - L| + (N-1) |a_N - a_{N-1}|
    double tolerance = 0.0;              // tol * max(1, |a_1|)
    bool residuals_non_increasing = false;
    bool pass = false;
};

/// Checks sum n Delta^2 a_n = a_1 - lim a_n on a finite prefix.
///
/// Summation by parts gives exactly
///   P_{N-2} = a_1 - a_N + (N-1)(a_N - a_{N-1}),
/// so the truncation error is bounded by the tail allowance above; the check
/// passes when the final residual is within tolerance plus that allowance and
/// the residuals never grow (beyond tolerance).
inline ConvexSumReport convex_sum_identity(const RealSequence& s, double tol = 1e-9)
{
    if (!s.limit()) throw StructuralError("convex sum identity needs a declared limit");
    if (auto bad = detail::first_convexity_violation(s, tol)) {
        throw PreconditionError("sequence is not convex: Delta^2 a_" + std::to_string(*bad) + " < 0", *bad);
    }
    const auto d2 = second_difference(s);
    const double limit = *s.limit();
    const std::size_t n = s.size();

    ConvexSumReport r;
    r.target = s.at(1) - limit;
    r.tolerance = tol * std::max(1.0, std::abs(s.at(1)));
    double acc = 0.0;
    for (std::size_t i = 0; i < d2.size(); ++i) {
        acc += static_cast<double>(i + 1) * d2.values()[i];
        r.partial_sums.push_back(acc);
        r.residuals.push_back(std::abs(acc - r.target));
    }
    r.final_residual = r.residuals.back();
    r.tail_allowance = std::abs(s.at(n) - limit) + static_cast<double>(n - 1) * std::abs(s.at(n) - s.at(n - 1));
    r.residuals_non_increasing = true;
    for (std::size_t i = 1; i < r.residuals.size(); ++i) {
        if (r.residuals[i] > r.residuals[i - 1] + r.tolerance) {
            r.residuals_non_increasing = false;
            break;
        }
    }
    r.pass = r.residuals_non_increasing && r.final_residual <= r.tolerance + r.tail_allowance;
    return r;
}

struct DyadicBoundReport {
    double a0 = 0.0;
    double c = 0.0;
    double required_c_sq = 0.0;         // sum_{n<=N-1} n |a_n - a_{n+1}|^2
    std::vector<double> averages;       // b_m - a_0 for m = 0..M, 2^M <= N
    std::size_t covered = 0;            // 2^M: the bound is proved for n <= covered
    double sup_a = 0.0;                 // sup_{n<=covered} |a_n - a_0|
    double sup_a_all = 0.0;             // sup over the whole prefix, for information
    double sup_b = 0.0;                 // sup_m |b_m - a_0|
    double bound = 0.0;                 // 3 sup_b + |c|
    double slack = 0.0;                 // bound - sup_a
    bool holds = false;
};

/// sqrt(sum_{n<=N-1} n |a_n - a_{n+1}|^2), the smallest admissible c.
inline double dyadic_min_c(const RealSequence& s)
{
    double acc = 0.0;
    for (std::size_t n = 1; n < s.size(); ++n) {
        const double d = s.at(n) - s.at(n + 1);
        acc += static_cast<double>(n) * d * d;
    }
    return std::sqrt(acc);
}

/// Checks sup |a_n - a_0| <= 3 sup |b_m - a_0| + |c| with the a_0 shift.
///
/// For 2^m <= n <= 2^{m+1}, a_n = 2 b_{m+1} - b_m - 2^-m sum_{k=2^m+1}^{2^{m+1}} (a_k - a_n),
/// which needs b_{m+1}; on a prefix of length N the bound is therefore
/// asserted for n up to the largest power of two not exceeding N.
inline DyadicBoundReport dyadic_bound_check(const RealSequence& s, double c)
{
    if (!s.limit()) throw StructuralError("dyadic bound needs a_0 (declared limit)");
    if (s.size() < 1) throw StructuralError("dyadic bound needs at least one term");
    DyadicBoundReport r;
    r.a0 = *s.limit();
    r.c = c;
    double acc = 0.0;
    for (std::size_t n = 1; n < s.size(); ++n) {
        const double d = s.at(n) - s.at(n + 1);
        acc += static_cast<double>(n) * d * d;
        if (c * c < acc - 1e-12 * std::max(1.0, acc)) {
            throw PreconditionError("c^2 = " + std::to_string(c * c) + " is below the partial sum " +
                                        std::to_string(acc) + " of n|a_n - a_{n+1}|^2 at n = " + std::to_string(n),
                                    n);
        }
    }
    r.required_c_sq = acc;

    double running = 0.0;
    std::size_t next = 1;
    for (std::size_t k = 1; k <= s.size(); ++k) {
        running += s.at(k) - r.a0;
        if (k == next) {
            r.averages.push_back(running / static_cast<double>(k));
            r.covered = k;
            next *= 2;
        }
    }
    for (std::size_t n = 1; n <= s.size(); ++n) {
        const double v = std::abs(s.at(n) - r.a0);
        r.sup_a_all = std::max(r.sup_a_all, v);
        if (n <= r.covered) r.sup_a = std::max(r.sup_a, v);
    }
    for (double b : r.averages) r.sup_b = std::max(r.sup_b, std::abs(b));
    r.bound = 3.0 * r.sup_b + std::abs(c);
    r.slack = r.bound - r.sup_a;
    r.holds = r.sup_a <= r.bound;
    return r;
}

} // namespace condexp
