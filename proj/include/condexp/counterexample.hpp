#pragma once

// Reflection space {x in R^2 : |x1| = |x2| > 0} with the reflections
// R1(x1, x2) = (x1, -x2) and R2(x1, x2) = (-x1, x2).
//
// G_i is generated by the two-point sets A_ix = {x, R_i x}. A finitely
// described element of sigma(G1 u G2) is a Boolean expression over such
// atoms; it mentions finitely many radii, and on every other orbit it
// contains either all four points or none. The diagonal x1 = x2 splits every
// orbit in half, so an orbit at an unmentioned radius refutes any candidate.

#include "condexp/errors.hpp"
#include "condexp/report.hpp"
#include "condexp/space.hpp"
#include "condexp/sufficiency.hpp"

#include <boost/rational.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace condexp {

using Rational = boost::rational<std::int64_t>;

inline std::string to_string(const Rational& r)
{
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// Accepts "3", "-2", "3/4" and finite decimals such as "0.125".
inline Rational parse_rational(std::string_view text)
{
    const std::string s(text);
    auto fail = [&]() -> Rational { throw FormatError("invalid rational '" + s + "'"); };
    if (s.empty()) return fail();
    auto parse_int = [&](std::string_view digits) -> std::int64_t {
        if (digits.empty()) fail();
        std::size_t start = (digits[0] == '-' || digits[0] == '+') ? 1 : 0;
        if (start == digits.size()) fail();
        for (std::size_t i = start; i < digits.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(digits[i]))) fail();
        }
        if (digits.size() - start > 17) fail();
        return std::stoll(std::string(digits));
    };
    try {
        if (auto slash = s.find('/'); slash != std::string::npos) {
            const auto den = parse_int(std::string_view(s).substr(slash + 1));
            if (den == 0) return fail();
            return Rational(parse_int(std::string_view(s).substr(0, slash)), den);
        }
        if (auto dot = s.find('.'); dot != std::string::npos) {
            const std::string_view frac = std::string_view(s).substr(dot + 1);
            if (frac.empty() || frac.size() > 12 || frac[0] == '-' || frac[0] == '+') return fail();
            std::int64_t scale = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
            std::string whole = s.substr(0, dot);
            const bool negative = !whole.empty() && whole[0] == '-';
            if (whole.empty() || whole == "-" || whole == "+") whole += "0";
            const auto ip = parse_int(whole);
            const auto fp = parse_int(frac);
            const auto magnitude = (ip < 0 ? -ip : ip) * scale + fp;
            return Rational(negative ? -magnitude : magnitude, scale);
        }
        return Rational(parse_int(s));
    } catch (const boost::bad_rational&) {
        return fail();
    }
}

// ---------------------------------------------------------------------------
// Points and atoms

struct ReflectionPoint {
    Rational radius{1};
    int s1 = 1;
    int s2 = 1;

    ReflectionPoint() = default;
    ReflectionPoint(Rational r, int sign1, int sign2) : radius(r), s1(sign1), s2(sign2)
    {
        if (radius <= 0) throw StructuralError("reflection point radius must be positive");
        if ((s1 != 1 && s1 != -1) || (s2 != 1 && s2 != -1)) {
            throw StructuralError("reflection point signs must be +1 or -1");
        }
    }

    bool operator==(const ReflectionPoint&) const = default;

    /// The four sign choices at radius r.
    static std::vector<ReflectionPoint> orbit(Rational r)
    {
        return {{r, 1, 1}, {r, 1, -1}, {r, -1, 1}, {r, -1, -1}};
    }

    std::string to_string() const
    {
        auto coord = [&](int s) { return (s < 0 ? "-" : "") + condexp::to_string(radius); };
        return "(" + coord(s1) + "," + coord(s2) + ")";
    }
};

inline ReflectionPoint reflect1(const ReflectionPoint& p) { return {p.radius, p.s1, -p.s2}; }
inline ReflectionPoint reflect2(const ReflectionPoint& p) { return {p.radius, -p.s1, p.s2}; }

/// x1 = x2.
inline bool in_diagonal(const ReflectionPoint& p) { return p.s1 == p.s2; }

/// A_ix: family 1 fixes the sign of x1, family 2 the sign of x2.
struct GeneratorAtom {
    int family = 1;
    Rational radius{1};
    int sign = 1;

    GeneratorAtom() = default;
    GeneratorAtom(int fam, Rational r, int s) : family(fam), radius(r), sign(s)
    {
        if (family != 1 && family != 2) throw StructuralError("generator family must be 1 or 2");
        if (radius <= 0) throw StructuralError("generator radius must be positive");
        if (sign != 1 && sign != -1) throw StructuralError("generator sign must be +1 or -1");
    }

    bool contains(const ReflectionPoint& p) const
    {
        return p.radius == radius && (family == 1 ? p.s1 : p.s2) == sign;
    }

    bool operator==(const GeneratorAtom&) const = default;
};

// ---------------------------------------------------------------------------
// Symbolic sets

class SymbolicSet {
public:
    enum class Kind { Atom, Union, Intersection, Complement };

    static SymbolicSet atom(GeneratorAtom a);
    /// Empty argument list gives the empty set.
    static SymbolicSet unite(std::vector<SymbolicSet> parts);
    /// Empty argument list gives the whole space.
    static SymbolicSet intersect(std::vector<SymbolicSet> parts);
    static SymbolicSet complement(SymbolicSet s);
    static SymbolicSet empty() { return unite({}); }
    static SymbolicSet universe() { return intersect({}); }

    Kind kind() const;
    bool contains(const ReflectionPoint& p) const;
    std::set<Rational> mentioned_radii() const;
    std::size_t depth() const;
    std::size_t atom_count() const;

    /// Prefix form accepted by parse_symbolic_set.
    std::string to_string() const;

private:
    struct Node;
    explicit SymbolicSet(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    void collect_radii(std::set<Rational>& out) const;

    std::shared_ptr<const Node> node_;
};

struct SymbolicSet::Node {
    Kind kind;
    GeneratorAtom atom;
    std::vector<SymbolicSet> children;
};

inline SymbolicSet SymbolicSet::atom(GeneratorAtom a)
{
    return SymbolicSet(std::make_shared<const Node>(Node{Kind::Atom, a, {}}));
}

inline SymbolicSet SymbolicSet::unite(std::vector<SymbolicSet> parts)
{
    return SymbolicSet(std::make_shared<const Node>(Node{Kind::Union, {}, std::move(parts)}));
}

inline SymbolicSet SymbolicSet::intersect(std::vector<SymbolicSet> parts)
{
    return SymbolicSet(std::make_shared<const Node>(Node{Kind::Intersection, {}, std::move(parts)}));
}

inline SymbolicSet SymbolicSet::complement(SymbolicSet s)
{
    return SymbolicSet(std::make_shared<const Node>(Node{Kind::Complement, {}, {std::move(s)}}));
}

inline SymbolicSet::Kind SymbolicSet::kind() const { return node_->kind; }

inline bool SymbolicSet::contains(const ReflectionPoint& p) const
{
    switch (node_->kind) {
    case Kind::Atom: return node_->atom.contains(p);
    case Kind::Union:
        return std::any_of(node_->children.begin(), node_->children.end(),
                           [&](const SymbolicSet& c) { return c.contains(p); });
    case Kind::Intersection:
        return std::all_of(node_->children.begin(), node_->children.end(),
                           [&](const SymbolicSet& c) { return c.contains(p); });
    case Kind::Complement: return !node_->children.front().contains(p);
    }
    return false;
}

inline void SymbolicSet::collect_radii(std::set<Rational>& out) const
{
    if (node_->kind == Kind::Atom) {
        out.insert(node_->atom.radius);
        return;
    }
    for (const auto& c : node_->children) c.collect_radii(out);
}

inline std::set<Rational> SymbolicSet::mentioned_radii() const
{
    std::set<Rational> out;
    collect_radii(out);
    return out;
}

inline std::size_t SymbolicSet::depth() const
{
    std::size_t d = 0;
    for (const auto& c : node_->children) d = std::max(d, c.depth());
    return d + 1;
}

inline std::size_t SymbolicSet::atom_count() const
{
    if (node_->kind == Kind::Atom) return 1;
    std::size_t n = 0;
    for (const auto& c : node_->children) n += c.atom_count();
    return n;
}

inline std::string SymbolicSet::to_string() const
{
    switch (node_->kind) {
    case Kind::Atom: {
        const auto& a = node_->atom;
        return "(a " + std::to_string(a.family) + " " + condexp::to_string(a.radius) + " " +
               (a.sign > 0 ? "+" : "-") + ")";
    }
    case Kind::Complement: return "(c " + node_->children.front().to_string() + ")";
    case Kind::Union:
    case Kind::Intersection: {
        std::string s = node_->kind == Kind::Union ? "(u" : "(i";
        for (const auto& c : node_->children) s += " " + c.to_string();
        return s + ")";
    }
    }
    return "";
}

inline bool membership(const SymbolicSet& s, const ReflectionPoint& p) { return s.contains(p); }

namespace detail {

class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view text) : text_(text) {}

    SymbolicSet parse()
    {
        SymbolicSet s = expression();
        skip_space();
        if (pos_ != text_.size()) error("trailing input");
        return s;
    }

private:
    [[noreturn]] void error(const std::string& what) const
    {
        throw FormatError("expression error at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string token()
    {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
               text_[pos_] != ')') {
            ++pos_;
        }
        if (start == pos_) error("expected a token");
        return std::string(text_.substr(start, pos_ - start));
    }

    bool peek_close()
    {
        skip_space();
        return pos_ < text_.size() && text_[pos_] == ')';
    }

    void expect(char c)
    {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != c) error(std::string("expected '") + c + "'");
        ++pos_;
    }

    static int parse_sign(const std::string& t)
    {
        if (t == "+" || t == "+1" || t == "1") return 1;
        if (t == "-" || t == "-1") return -1;
        throw FormatError("invalid sign '" + t + "'");
    }

    SymbolicSet expression()
    {
        expect('(');
        const std::string op = token();
        SymbolicSet out = SymbolicSet::empty();
        if (op == "a") {
            const std::string fam = token();
            if (fam != "1" && fam != "2") error("atom family must be 1 or 2, got '" + fam + "'");
            const Rational radius = parse_rational(token());
            if (radius <= 0) error("atom radius must be positive");
            out = SymbolicSet::atom(GeneratorAtom(fam == "1" ? 1 : 2, radius, parse_sign(token())));
        } else if (op == "c") {
            out = SymbolicSet::complement(expression());
        } else if (op == "u" || op == "i") {
            std::vector<SymbolicSet> parts;
            while (!peek_close()) parts.push_back(expression());
            out = op == "u" ? SymbolicSet::unite(std::move(parts)) : SymbolicSet::intersect(std::move(parts));
        } else {
            error("unknown operator '" + op + "'");
        }
        expect(')');
        return out;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Grammar: (u e...) | (i e...) | (c e) | (a FAMILY RADIUS SIGN).
inline SymbolicSet parse_symbolic_set(std::string_view text) { return detail::ExpressionParser(text).parse(); }

/// A point where `s` and the diagonal disagree, taken from the orbit at the
/// fresh radius max(mentioned radii) + 1 (or 1 when no radius is mentioned).
inline ReflectionPoint refute_diagonal(const SymbolicSet& s)
{
    const auto radii = s.mentioned_radii();
    const Rational fresh = radii.empty() ? Rational(1) : *radii.rbegin() + 1;
    const auto orbit = ReflectionPoint::orbit(fresh);
    const bool first = s.contains(orbit.front());
    for (const auto& p : orbit) {
        if (s.contains(p) != first) {
            throw std::logic_error("symbolic set is not constant on the orbit at unmentioned radius " +
                                   to_string(fresh));
        }
    }
    const ReflectionPoint witness = first ? ReflectionPoint(fresh, 1, -1) : ReflectionPoint(fresh, 1, 1);
    if (s.contains(witness) == in_diagonal(witness)) {
        throw std::logic_error("refuter produced a point that does not separate the set from the diagonal");
    }
    return witness;
}

// ---------------------------------------------------------------------------
// Finite truncations

/// Orbits at finitely many radii, one measure per orbit putting mass 1/4 on
/// each of its points. Outcome 4i + k is the k-th sign pair of radius i in
/// the order (+,+), (+,-), (-,+), (-,-).
struct Truncation {
    std::vector<Rational> radii;         // ascending
    std::vector<ReflectionPoint> points;
    OutcomeSpace space;
    MeasureFamily family;
    Partition g1;                        // blocks {x, R1 x}: fixed sign of x1
    Partition g2;                        // blocks {x, R2 x}: fixed sign of x2
    Partition orbits;                    // meet of g1 and g2
    Partition join;                      // common refinement: singletons
    Partition join_with_diagonal;        // field generated by join and D; equals join here

    Index index_of(const ReflectionPoint& p) const
    {
        for (Index i = 0; i < points.size(); ++i) {
            if (points[i] == p) return i;
        }
        throw StructuralError("point " + p.to_string() + " is not in the truncation");
    }
};

inline Truncation finite_truncation(std::vector<Rational> radii)
{
    if (radii.empty()) throw StructuralError("truncation needs at least one radius");
    std::sort(radii.begin(), radii.end());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (radii[i] <= 0) throw StructuralError("radius " + to_string(radii[i]) + " is not positive");
        if (i > 0 && radii[i] == radii[i - 1]) throw StructuralError("duplicate radius " + to_string(radii[i]));
    }
    const std::size_t n = 4 * radii.size();
    std::vector<ReflectionPoint> points;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    std::vector<Index> l1(n), l2(n), lo(n);
    for (Index i = 0; i < radii.size(); ++i) {
        std::vector<double> row(n, 0.0);
        for (const auto& p : ReflectionPoint::orbit(radii[i])) {
            const Index w = points.size();
            points.push_back(p);
            labels.push_back(p.to_string());
            row[w] = 0.25;
            l1[w] = 2 * i + (p.s1 > 0 ? 0 : 1);
            l2[w] = 2 * i + (p.s2 > 0 ? 0 : 1);
            lo[w] = i;
        }
        rows.push_back(std::move(row));
    }
    Partition g1 = Partition::from_labels(l1);
    Partition g2 = Partition::from_labels(l2);
    Partition j = join(g1, g2);
    std::vector<Index> ld(n);
    for (Index w = 0; w < n; ++w) ld[w] = j.block_of(w) * 2 + (in_diagonal(points[w]) ? 1 : 0);
    Partition jd = Partition::from_labels(ld);
    return Truncation{std::move(radii),
                      std::move(points),
                      OutcomeSpace(std::move(labels)),
                      MeasureFamily(std::move(rows)),
                      std::move(g1),
                      std::move(g2),
                      Partition::from_labels(lo),
                      std::move(j),
                      std::move(jd)};
}

/// Checks that g = (f + f o R_i) / 2 satisfies E_x[g 1_H] = E_x[f 1_H] for
/// every orbit measure and every block H of G_i, for i = 1, 2, and that the
/// sufficiency checker agrees that G_1 and G_2 are sufficient.
inline SuiteReport verify_g_construction(const Truncation& t, const RandomVariable& f, double tol = 1e-12)
{
    detail::require_same_size(f.size(), t.points.size(), "verify_g_construction");
    SuiteReport r;
    struct Side {
        const Partition* p;
        ReflectionPoint (*reflect)(const ReflectionPoint&);
        const char* name;
    };
    for (const Side side : {Side{&t.g1, &reflect1, "G1"}, Side{&t.g2, &reflect2, "G2"}}) {
        std::vector<double> gv(f.size());
        for (Index w = 0; w < f.size(); ++w) gv[w] = 0.5 * (f[w] + f[t.index_of(side.reflect(t.points[w]))]);
        const RandomVariable g(std::move(gv));
        if (!is_measurable(g, *side.p)) r.fail(std::string("g is not ") + side.name + "-measurable");

        double worst = 0.0;
        for (Index x = 0; x < t.family.count(); ++x) {
            const auto row = t.family.row(x);
            for (const Block& h : side.p->blocks()) {
                worst = std::max(worst, std::abs(detail::block_integral(row, h, g) - detail::block_integral(row, h, f)));
            }
        }
        r.observe(worst);
        if (worst > tol) r.fail(std::string(side.name) + ": max violation " + std::to_string(worst));

        const auto cert = check_sufficient(t.family, *side.p, f);
        if (!cert.sufficient) {
            r.fail(std::string("sufficiency checker rejects ") + side.name);
        } else {
            double gap = 0.0;
            for (Index w = 0; w < f.size(); ++w) gap = std::max(gap, std::abs((*cert.g)[w] - g[w]));
            r.observe(gap);
            if (gap > tol) r.fail(std::string(side.name) + ": checker's g differs from the reflection average");
        }
        r.note(std::string(side.name) + ": max |E[g 1_H] - E[f 1_H]| = " + std::to_string(worst));
    }
    return r;
}

inline SuiteReport verify_g_construction(std::vector<Rational> radii, const RandomVariable& f, double tol = 1e-12)
{
    return verify_g_construction(finite_truncation(std::move(radii)), f, tol);
}

inline constexpr const char* kFiniteCaseLimitation =
    "On a finite truncation the join of G1 and G2 is the singleton partition, and singletons are always "
    "sufficient. The failure of sufficiency for sigma(G1 u G2) needs uncountably many orbits (every set in "
    "the generated field is countable or co-countable while the diagonal is neither), so the finite case "
    "cannot reproduce it; refute_diagonal carries that argument instead.";

inline SuiteReport truncation_join_is_sufficient(std::vector<Rational> radii)
{
    const Truncation t = finite_truncation(std::move(radii));
    SuiteReport r;
    r.result = t.join;
    if (!(t.join == Partition::singletons(t.points.size()))) r.fail("join of G1 and G2 is not the singleton partition");
    if (t.join.block_count() != 4 * t.radii.size()) r.fail("join block count differs from 4 * number of radii");
    if (!check_sufficient(t.family, t.join).sufficient) r.fail("join is not sufficient");
    if (!(t.join_with_diagonal == t.join)) r.fail("adding the diagonal changed the field");
    r.note("join has " + std::to_string(t.join.block_count()) + " blocks (4 x " + std::to_string(t.radii.size()) +
           " radii) and is sufficient");
    r.note(kFiniteCaseLimitation);
    return r;
}

} // namespace condexp
