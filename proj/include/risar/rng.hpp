#ifndef RISAR_RNG_HPP
#define RISAR_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>

namespace risar {

using cplx = std::complex<double>;

/// Deterministic random stream.  Substreams derived from (seed, id) are
/// mutually independent for Monte Carlo trials.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    static Rng substream(std::uint64_t seed, std::uint64_t id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
        Rng r(0);
        r.eng_.seed(seq);
        return r;
    }

    double normal() { return normal_(eng_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    std::uint64_t integer(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
    }

    /// CN(0, variance) draw.
    cplx cnormal(double variance = 1.0) {
        const double s = std::sqrt(variance / 2.0);
        return {s * normal(), s * normal()};
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace risar

#endif // RISAR_RNG_HPP
