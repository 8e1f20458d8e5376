#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>

namespace cepred {

/// Deterministic random stream. Every stochastic operation in the library
/// takes an explicit Rng; identical seeds reproduce identical trajectories
/// byte-for-byte. Gaussian draws use Box-Muller so the sequence does not
/// depend on the standard library's distribution internals.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Independent stream for a trial index, decorrelated via splitmix64.
    static Rng for_trial(std::uint64_t seed, std::uint64_t trial) {
        std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (trial + 1);
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return Rng(x ^ (x >> 31));
    }

    /// Child stream, decorrelated from the parent's future output. Runners
    /// split the incoming stream into an environment stream and an
    /// algorithm-internal stream in a fixed order, so every algorithm sees
    /// the same sampled trajectory for a given trial seed.
    Rng split() {
        std::uint64_t x = gen_() ^ 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        return Rng(x ^ (x >> 31));
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_pos() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }

    /// Standard normal draw (Box-Muller, pair cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double angle = 2.0 * M_PI * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Index drawn from the distribution whose cumulative sums are `cdf`
    /// (non-decreasing, cdf[last] == 1).
    Eigen::Index discrete_from_cdf(const Eigen::VectorXd& cdf) {
        const double u = uniform();
        Eigen::Index lo = 0;
        Eigen::Index hi = cdf.size() - 1;
        while (lo < hi) {
            const Eigen::Index mid = (lo + hi) / 2;
            if (cdf[mid] > u)
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cepred
