#pragma once

#include "condexp/space.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace condexp {

enum class Verdict { Pass, Fail, HypothesisNotMet };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::HypothesisNotMet: return "hypothesis-not-met";
    }
    return "?";
}

/// Outcome of a multi-step property suite.
struct SuiteReport {
    Verdict verdict = Verdict::Pass;
    std::vector<std::string> notes;
    double max_violation = 0.0;           // largest numerical discrepancy seen
    std::optional<Partition> result;      // partition the suite concluded about
    std::optional<std::size_t> position;  // 1-based position of the offending input

    bool passed() const noexcept { return verdict == Verdict::Pass; }

    void note(std::string line) { notes.push_back(std::move(line)); }

    void fail(std::string line)
    {
        if (verdict == Verdict::Pass) verdict = Verdict::Fail;
        notes.push_back("FAIL: " + std::move(line));
    }

    void hypothesis_not_met(std::string line, std::optional<std::size_t> at = std::nullopt)
    {
        verdict = Verdict::HypothesisNotMet;
        position = at;
        notes.push_back("HYPOTHESIS NOT MET: " + std::move(line));
    }

    void observe(double violation) { max_violation = std::max(max_violation, violation); }
};

} // namespace condexp
