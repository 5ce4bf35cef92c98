#include "cli_app.hpp"

#include "condexp/condexp.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace condexp::cli {

std::string format_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

namespace {

constexpr const char* kExitCodes =
    "Exit codes: 0 success/pass, 2 negative verdict (not sufficient, not converged, check failed), "
    "3 hypothesis not met, 64 usage error, 65 input-format error.";

struct GlobalConfig {
    double tol = 1e-10;
    std::size_t max_iter = 10'000;
    std::uint64_t seed = 0;
    std::string out;
};

std::vector<std::string> split(const std::string& text, const std::string& separators)
{
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (separators.find(c) != std::string::npos) {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

double parse_double(const std::string& token, const std::string& what)
{
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) throw FormatError(what + ": '" + token + "' is not a number");
    return v;
}

std::vector<double> parse_vector(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    for (const auto& tok : split(text, ", \t\r\n;")) out.push_back(parse_double(tok, what));
    if (out.empty()) throw FormatError(what + " is empty");
    return out;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RandomVariable variable_for(const SpaceDescription& d, std::vector<double> values, const std::string& what)
{
    if (values.size() != d.space.size()) {
        throw FormatError(what + " has " + std::to_string(values.size()) + " entries, the space has " +
                          std::to_string(d.space.size()));
    }
    return RandomVariable(std::move(values));
}

std::string join_values(std::span<const double> v, const char* sep = ",")
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += format_double(v[i]);
    }
    return s;
}

/// Sends text to a file when a path is given, otherwise to `fallback`.
void emit(const std::string& path, const std::string& text, std::ostream& fallback)
{
    if (path.empty()) {
        fallback << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw FormatError("cannot write '" + path + "'");
    f << text;
}

Index measure_index(const SpaceDescription& d, std::size_t index)
{
    if (index >= d.family.count()) {
        throw FormatError("measure index " + std::to_string(index) + " out of range; the space has " +
                          std::to_string(d.family.count()) + " measures");
    }
    return index;
}

// ---------------------------------------------------------------------------

struct IterateArgs {
    std::string space;
    std::vector<std::string> partitions;
    std::size_t measure = 0;
    std::string x;
    std::string x_file;
    std::string report;
    std::string schedule;
};

int run_iterate(const IterateArgs& a, const GlobalConfig& g, std::ostream& out)
{
    const auto d = load_space(a.space);
    if (a.partitions.empty()) throw FormatError("--partitions needs at least one name");
    const Index gamma = measure_index(d, a.measure);
    std::vector<CondExpOperator> ops;
    for (const auto& name : a.partitions) ops.emplace_back(d.partition(name), d.family, gamma);
    const std::string x_text = a.x_file.empty() ? a.x : read_file(a.x_file);
    const RandomVariable x = variable_for(d, parse_vector(x_text, "x"), "x");

    Schedule schedule = Schedule::alternating(ops.size());
    if (!a.schedule.empty()) {
        std::vector<Index> order;
        for (const auto& tok : split(a.schedule, ",")) {
            const double v = parse_double(tok, "schedule");
            if (v < 0 || v != static_cast<double>(static_cast<Index>(v))) {
                throw FormatError("schedule entry '" + tok + "' is not an operator index");
            }
            order.push_back(static_cast<Index>(v));
        }
        schedule = Schedule::custom(std::move(order));
    }

    const auto r = iterate(ops, schedule, x, IterateOptions{g.tol, g.max_iter});

    std::ostringstream csv;
    csv << "iter,norm2_sq,diff2_sq,sup_residual\n";
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        csv << (k + 1) << ',' << format_double(r.norms2[k]) << ',';
        if (k < r.diffs2.size()) csv << format_double(r.diffs2[k]);
        csv << ',' << format_double(r.sup_residuals[k]) << '\n';
    }
    csv << "# converged=" << (r.converged ? "true" : "false") << " iterations=" << r.iterations_used
        << " limit=" << join_values(r.limit.values()) << '\n';

    const std::string path = a.report.empty() ? g.out : a.report;
    if (path.empty()) {
        out << csv.str();
    } else {
        emit(path, csv.str(), out);
        out << "converged: " << (r.converged ? "yes" : "no") << '\n'
            << "iterations: " << r.iterations_used << '\n'
            << "residual: " << format_double(r.residual) << '\n'
            << "limit: " << join_values(r.limit.values()) << '\n'
            << "meet projection: " << join_values(r.target.values()) << '\n';
    }
    return r.converged ? kExitOk : kExitNegative;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::string space;
    std::string partition;
    std::size_t measure = 0;
    std::size_t trials = 20;
};

int run_verify(const VerifyArgs& a, const GlobalConfig& g, std::ostream& out)
{
    constexpr double kThreshold = 1e-12;
    const auto d = load_space(a.space);
    const CondExpOperator op(d.partition(a.partition), d.family, measure_index(d, a.measure));
    if (a.trials == 0) throw FormatError("--trials must be at least 1");
    const auto r = verify_projection_properties(op, a.trials, g.seed);
    auto line = [&](const char* name, double v) {
        out << std::left << std::setw(18) << name << format_double(v) << '\n';
    };
    out << "trials            " << r.trials << "  seed " << g.seed << '\n';
    line("self_adjoint", r.self_adjoint);
    line("idempotent", r.idempotent);
    line("contraction_l1", r.contraction_l1);
    line("contraction_l2", r.contraction_l2);
    line("contraction_linf", r.contraction_linf);
    line("orthogonality", r.orthogonality);
    line("block_averages", r.block_averages);
    line("measurability", r.measurability);
    const bool ok = r.within(kThreshold);
    out << "verdict           " << (ok ? "pass" : "fail") << " (threshold 1e-12)\n";
    return ok ? kExitOk : kExitNegative;
}

// ---------------------------------------------------------------------------

RealSequence read_sequence(const std::string& path)
{
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<double> values;
    std::optional<double> limit;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line.erase(std::remove(line.begin(), line.end(), '\r'), line.end());
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        line = line.substr(first, line.find_last_not_of(" \t") - first + 1);
        if (line.rfind("limit=", 0) == 0) {
            if (!values.empty() || limit) throw FormatError("line " + std::to_string(lineno) + ": limit= must be the header line");
            limit = parse_double(line.substr(6), "line " + std::to_string(lineno));
            continue;
        }
        values.push_back(parse_double(line, "line " + std::to_string(lineno)));
    }
    if (values.empty()) throw FormatError("sequence file '" + path + "' has no values");
    if (!limit) throw FormatError("sequence file '" + path + "' needs a 'limit=L' header line");
    try {
        return RealSequence(std::move(values), limit);
    } catch (const StructuralError& e) {
        throw FormatError(e.what());
    }
}

struct LemmaArgs {
    std::string which;
    std::string input;
    std::optional<double> c;
};

int run_lemma(const LemmaArgs& a, const GlobalConfig& g, std::ostream& out)
{
    const RealSequence s = read_sequence(a.input);
    std::ostringstream rep;
    auto row = [&](const std::string& k, const std::string& v) { rep << std::left << std::setw(22) << k << v << '\n'; };
    bool pass = false;
    if (a.which == "convex-sum") {
        if (s.size() < 3) throw FormatError("convex-sum needs at least 3 values");
        const auto r = convex_sum_identity(s, g.tol);
        row("check", "convex-sum identity");
        row("terms", std::to_string(s.size()));
        row("target a_1 - L", format_double(r.target));
        row("partial sum", format_double(r.partial_sums.back()));
        row("residual", format_double(r.final_residual));
        row("tail allowance", format_double(r.tail_allowance));
        row("tolerance", format_double(r.tolerance));
        row("residuals monotone", r.residuals_non_increasing ? "yes" : "no");
        pass = r.pass;
    } else {
        const double c = a.c.value_or(dyadic_min_c(s));
        const auto r = dyadic_bound_check(s, c);
        row("check", "dyadic average bound");
        row("terms", std::to_string(s.size()));
        row("a_0", format_double(r.a0));
        row("c", format_double(r.c));
        row("required c^2", format_double(r.required_c_sq));
        row("dyadic levels", std::to_string(r.averages.size()));
        row("covered n <=", std::to_string(r.covered));
        row("sup |a_n - a_0|", format_double(r.sup_a));
        row("sup |b_m - a_0|", format_double(r.sup_b));
        row("bound 3 sup b + |c|", format_double(r.bound));
        row("slack", format_double(r.slack));
        pass = r.holds;
    }
    row("verdict", pass ? "pass" : "fail");
    emit(g.out, rep.str(), out);
    return pass ? kExitOk : kExitNegative;
}

// ---------------------------------------------------------------------------

struct SufficiencyArgs {
    std::string space;
    std::string partition;
    std::string f;
    std::string suite;
    std::vector<std::string> partitions;
};

int exit_for(Verdict v)
{
    switch (v) {
    case Verdict::Pass: return kExitOk;
    case Verdict::Fail: return kExitNegative;
    case Verdict::HypothesisNotMet: return kExitHypothesis;
    }
    return kExitNegative;
}

int run_sufficiency(const SufficiencyArgs& a, const GlobalConfig& g, std::ostream& out)
{
    const auto d = load_space(a.space);
    std::optional<RandomVariable> f;
    if (!a.f.empty()) f = variable_for(d, parse_vector(a.f, "f"), "f");
    std::ostringstream rep;

    if (a.suite.empty()) {
        if (a.partition.empty()) throw CLI::RequiredError("--partition");
        const Partition& p = d.partition(a.partition);
        const auto cert = check_sufficient(d.family, p, f);
        rep << "partition: " << a.partition << " (" << p.block_count() << " blocks)\n";
        rep << "sufficient: " << (cert.sufficient ? "yes" : "no") << '\n';
        if (cert.witness) {
            rep << "witness: " << cert.witness->describe() << '\n';
            rep << "violation: " << format_double(witness_violation(d.family, p, *cert.witness)) << '\n';
        }
        bool verdict = cert.sufficient;
        if (f) {
            const auto for_f = check_sufficient_for_f(d.family, p, *f);
            rep << "sufficient for f: " << (for_f.sufficient ? "yes" : "no") << '\n';
            if (for_f.g) rep << "g: " << join_values(for_f.g->values()) << '\n';
            if (for_f.witness) rep << "witness for f: " << for_f.witness->describe() << '\n';
            verdict = for_f.sufficient;
        }
        emit(g.out, rep.str(), out);
        return verdict ? kExitOk : kExitNegative;
    }

    std::vector<Partition> parts;
    for (const auto& name : a.partitions) parts.push_back(d.partition(name));
    std::vector<RandomVariable> tests = f ? std::vector<RandomVariable>{*f} : indicator_basis(d.space.size());
    const SuiteOptions options{IterateOptions{g.tol, g.max_iter}};
    SuiteReport r;
    try {
        if (a.suite == "intersection") {
            if (parts.size() != 2) throw FormatError("intersection suite needs exactly two --partitions");
            r = intersection_sufficiency_suite(d.family, parts[0], parts[1], tests, options);
        } else if (a.suite == "chain") {
            if (parts.empty()) throw FormatError("chain suite needs --partitions");
            r = decreasing_chain_suite(d.family, parts, tests);
        } else {
            if (parts.empty()) throw FormatError("countable suite needs --partitions");
            r = countable_intersection_suite(d.family, parts, tests, options);
        }
    } catch (const StructuralError& e) {
        rep << "suite: " << a.suite << '\n' << "verdict: hypothesis-not-met\n" << "reason: " << e.what() << '\n';
        emit(g.out, rep.str(), out);
        return kExitHypothesis;
    }
    rep << "suite: " << a.suite << '\n';
    for (const auto& n : r.notes) rep << "  " << n << '\n';
    if (r.result) {
        rep << "result blocks:";
        for (const auto& b : r.result->blocks()) {
            rep << " {";
            for (std::size_t i = 0; i < b.size(); ++i) rep << (i ? "," : "") << d.space.label(b[i]);
            rep << '}';
        }
        rep << '\n';
    }
    rep << "max discrepancy: " << format_double(r.max_violation) << '\n';
    rep << "verdict: " << to_string(r.verdict) << '\n';
    emit(g.out, rep.str(), out);
    return exit_for(r.verdict);
}

// ---------------------------------------------------------------------------

std::vector<Rational> parse_radii(const std::string& text)
{
    std::vector<Rational> radii;
    for (const auto& tok : split(text, ", ")) radii.push_back(parse_rational(tok));
    if (radii.empty()) throw FormatError("--radii is empty");
    return radii;
}

int run_refute(const std::string& expr, std::ostream& out)
{
    const SymbolicSet s = parse_symbolic_set(expr);
    const auto radii = s.mentioned_radii();
    const ReflectionPoint w = refute_diagonal(s);
    out << "expression: " << s.to_string() << '\n';
    out << "mentioned radii:";
    for (const auto& r : radii) out << ' ' << to_string(r);
    out << (radii.empty() ? " none\n" : "\n");
    out << "witness: " << w.to_string() << '\n';
    out << "in set: " << (membership(s, w) ? "yes" : "no") << '\n';
    out << "in diagonal: " << (in_diagonal(w) ? "yes" : "no") << '\n';
    return kExitOk;
}

int run_truncate(const std::string& radii_text, const GlobalConfig& g, std::ostream& out)
{
    const Truncation t = finite_truncation(parse_radii(radii_text));
    SpaceDescription d{t.space, t.family, {}};
    d.partitions.emplace("g1", t.g1);
    d.partitions.emplace("g2", t.g2);
    d.partitions.emplace("orbits", t.orbits);
    d.partitions.emplace("join", t.join);
    d.partitions.emplace("join_with_diagonal", t.join_with_diagonal);
    emit(g.out, to_json(d).dump(2) + "\n", out);
    if (!g.out.empty()) out << "wrote " << t.points.size() << " outcomes, " << t.radii.size() << " measures to " << g.out << '\n';
    return kExitOk;
}

int run_truncation_check(const std::string& radii_text, const std::string& f_text, const GlobalConfig& g,
                         std::ostream& out)
{
    const Truncation t = finite_truncation(parse_radii(radii_text));
    RandomVariable f;
    if (f_text.empty()) {
        Rng rng(g.seed);
        f = RandomVariable(rng.uniform_vector(t.points.size(), -1.0, 1.0));
    } else {
        auto values = parse_vector(f_text, "f");
        if (values.size() != t.points.size()) {
            throw FormatError("f has " + std::to_string(values.size()) + " entries, the truncation has " +
                              std::to_string(t.points.size()));
        }
        f = RandomVariable(std::move(values));
    }
    const auto gc = verify_g_construction(t, f);
    const auto js = truncation_join_is_sufficient(t.radii);
    std::ostringstream rep;
    rep << "g construction: " << to_string(gc.verdict) << " (max violation " << format_double(gc.max_violation) << ")\n";
    for (const auto& n : gc.notes) rep << "  " << n << '\n';
    rep << "join sufficient: " << to_string(js.verdict) << '\n';
    for (const auto& n : js.notes) rep << "  " << n << '\n';
    emit(g.out, rep.str(), out);
    return gc.passed() && js.passed() ? kExitOk : kExitNegative;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Conditional expectation operators, alternating iterates and sufficiency on finite spaces",
                 "condexp"};
    app.footer(kExitCodes);
    app.require_subcommand(1);

    GlobalConfig g;
    app.add_option("--tol", g.tol, "Tolerance (default 1e-10)")->check(CLI::PositiveNumber);
    app.add_option("--max-iter", g.max_iter, "Iteration cap (default 10000)")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Seed for generated vectors (default 0)");
    app.add_option("--out", g.out, "Write the report to this file instead of stdout");

    std::function<int()> action;

    IterateArgs it;
    auto* iterate_cmd = app.add_subcommand("iterate", "Alternating conditional expectations S_n = T_n...T_1");
    iterate_cmd->add_option("--space", it.space, "Space-description JSON file")->required();
    iterate_cmd->add_option("--partitions", it.partitions, "Partition names, comma separated")
        ->required()
        ->delimiter(',');
    iterate_cmd->add_option("--measure", it.measure, "Index of the weighting measure (default 0)");
    auto* x_opt = iterate_cmd->add_option("--x", it.x, "Start vector, comma separated");
    auto* xf_opt = iterate_cmd->add_option("--x-file", it.x_file, "File holding the start vector");
    x_opt->excludes(xf_opt);
    iterate_cmd->add_option("--report", it.report, "CSV report path (falls back to --out, then stdout)");
    iterate_cmd->add_option("--schedule", it.schedule, "Custom cyclic order of operator indices, e.g. 0,1,1");
    iterate_cmd->footer(std::string("CSV columns: iter,norm2_sq,diff2_sq,sup_residual; last line '# ... limit=...'.\n") +
                        kExitCodes);
    iterate_cmd->callback([&] {
        if (it.x.empty() && it.x_file.empty()) throw CLI::RequiredError("--x or --x-file");
        action = [&] { return run_iterate(it, g, out); };
    });

    VerifyArgs vf;
    auto* verify_cmd = app.add_subcommand("verify", "Check projection axioms of E[.|p] on random vectors");
    verify_cmd->add_option("--space", vf.space, "Space-description JSON file")->required();
    verify_cmd->add_option("--partition", vf.partition, "Partition name")->required();
    verify_cmd->add_option("--measure", vf.measure, "Index of the weighting measure (default 0)");
    verify_cmd->add_option("--trials", vf.trials, "Number of random vector pairs (default 20)");
    verify_cmd->footer(kExitCodes);
    verify_cmd->callback([&] { action = [&] { return run_verify(vf, g, out); }; });

    LemmaArgs lm;
    auto* lemma_cmd = app.add_subcommand("lemma", "Sequence checks: convex-sum identity or dyadic average bound");
    lemma_cmd->add_option("--which", lm.which, "convex-sum | dyadic")
        ->required()
        ->check(CLI::IsMember({"convex-sum", "dyadic"}));
    lemma_cmd->add_option("--input", lm.input, "One value per line, header 'limit=L'")->required();
    lemma_cmd->add_option("--c", lm.c, "Constant c for the dyadic bound (default: smallest admissible)");
    lemma_cmd->footer(kExitCodes);
    lemma_cmd->callback([&] { action = [&] { return run_lemma(lm, g, out); }; });

    SufficiencyArgs sf;
    auto* suff_cmd = app.add_subcommand("sufficiency", "Decide sufficiency or run an intersection suite");
    suff_cmd->add_option("--space", sf.space, "Space-description JSON file")->required();
    suff_cmd->add_option("--partition", sf.partition, "Partition name to check");
    suff_cmd->add_option("--f", sf.f, "Test function, comma separated");
    suff_cmd->add_option("--suite", sf.suite, "intersection | chain | countable")
        ->check(CLI::IsMember({"intersection", "chain", "countable"}));
    suff_cmd->add_option("--partitions", sf.partitions, "Partition names for the suite")->delimiter(',');
    suff_cmd->footer(kExitCodes);
    suff_cmd->callback([&] {
        if (sf.suite.empty() && sf.partition.empty()) throw CLI::RequiredError("--partition");
        if (!sf.suite.empty() && sf.partitions.empty()) throw CLI::RequiredError("--partitions");
        action = [&] { return run_sufficiency(sf, g, out); };
    });

    auto* ce_cmd = app.add_subcommand("counterexample", "Reflection-space counterexample tools");
    ce_cmd->require_subcommand(1);
    ce_cmd->footer(kExitCodes);
    std::string expr;
    auto* refute_cmd = ce_cmd->add_subcommand("refute", "Find a point separating a symbolic set from the diagonal");
    refute_cmd->add_option("--expr", expr, "(u e...) | (i e...) | (c e) | (a FAMILY RADIUS SIGN)")->required();
    refute_cmd->footer(kExitCodes);
    refute_cmd->callback([&] { action = [&] { return run_refute(expr, out); }; });
    std::string radii;
    auto* trunc_cmd = ce_cmd->add_subcommand("truncate", "Write the finite truncation as a space file");
    trunc_cmd->add_option("--radii", radii, "Radii, comma separated rationals")->required();
    trunc_cmd->footer(kExitCodes);
    trunc_cmd->callback([&] { action = [&] { return run_truncate(radii, g, out); }; });
    std::string check_f;
    auto* check_cmd = ce_cmd->add_subcommand("check", "Verify the reflection-average construction on a truncation");
    check_cmd->add_option("--radii", radii, "Radii, comma separated rationals")->required();
    check_cmd->add_option("--f", check_f, "Test function (default: random from --seed)");
    check_cmd->footer(kExitCodes);
    check_cmd->callback([&] { action = [&] { return run_truncation_check(radii, check_f, g, out); }; });

    for (auto* sub : {iterate_cmd, verify_cmd, lemma_cmd, suff_cmd, ce_cmd, refute_cmd, trunc_cmd, check_cmd}) {
        sub->fallthrough();
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const CLI::RequiredError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInputFormat;
    } catch (const PreconditionError& e) {
        err << "rejected: " << e.what() << '\n';
        return kExitHypothesis;
    } catch (const StructuralError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitInputFormat;
    }
}

} // namespace condexp::cli
