#pragma once

// Seedable, portable random source.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Standard distributions are implementation-defined, so values are
// derived from raw engine output with the mappings below; ports in other
// languages that reproduce MT19937-64 and these mappings reproduce every
// generated vector bit for bit.
//
//   unit()        = (next() >> 11) * 2^-53            in [0, 1)
//   uniform(a, b) = a + (b - a) * unit()
//   below(k)      = next() % k                        (k > 0)

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace condexp {

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    std::size_t below(std::size_t k) { return static_cast<std::size_t>(next() % k); }

    std::vector<double> uniform_vector(std::size_t n, double lo, double hi)
    {
        std::vector<double> out(n);
        for (double& v : out) v = uniform(lo, hi);
        return out;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace condexp
