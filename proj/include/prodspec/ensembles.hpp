#pragma once

// Factor sampling, the cyclic block linearization and the product.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "prodspec/core.hpp"

namespace prodspec {

enum class EntryLaw {
    complex_gaussian,
    real_gaussian,
    rademacher,
    symmetrized_exponential,
    zero,  // variance-0 test hook: every factor is exactly 0
};

inline std::string_view to_string(EntryLaw law) {
    switch (law) {
        case EntryLaw::complex_gaussian: return "complex-gaussian";
        case EntryLaw::real_gaussian: return "real-gaussian";
        case EntryLaw::rademacher: return "rademacher";
        case EntryLaw::symmetrized_exponential: return "symmetrized-exponential";
        case EntryLaw::zero: return "zero";
    }
    throw config_error("unknown entry law tag " + std::to_string(static_cast<int>(law)));
}

inline EntryLaw parse_entry_law(std::string_view tag) {
    for (auto law : {EntryLaw::complex_gaussian, EntryLaw::real_gaussian, EntryLaw::rademacher,
                     EntryLaw::symmetrized_exponential, EntryLaw::zero}) {
        if (tag == to_string(law)) return law;
    }
    throw config_error("unknown entry law '" + std::string(tag) + "'");
}

/// Tail parameter for which P(|sqrt(N) x| > t) <= theta^{-1} exp(-t^theta) holds for the
/// standardized law at every t >= 1. For the four laws theta = 1 works:
///   complex-gaussian  P = exp(-t^2)
///   real-gaussian     P = erfc(t/sqrt 2) <= exp(-t) for t >= 1
///   rademacher        P = 0 for t >= 1
///   symmetrized-exp   P = exp(-sqrt(2) t)
inline double default_theta(EntryLaw) { return 1.0; }

struct EnsembleSpec {
    int n = 2;
    int N = 1;
    EntryLaw entry_law = EntryLaw::complex_gaussian;
    double theta = 1.0;
    std::uint64_t master_seed = 0;

    static EnsembleSpec make(int n, int N, EntryLaw law, std::uint64_t seed) {
        return EnsembleSpec{n, N, law, default_theta(law), seed};
    }

    void validate() const {
        if (n < 2) throw config_error("n must be >= 2, got " + std::to_string(n));
        if (N < 1) throw config_error("N must be >= 1, got " + std::to_string(N));
        if (!(theta > 0.0)) throw config_error("theta must be positive");
        (void)to_string(entry_law);
    }
};

/// splitmix64 finalizer; used for every seed derivation in the library.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` split off `master`: mix(mix(master) ^ (index + 1)).
/// Depends only on (master, index), so any parallel schedule sees the same streams.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    return mix_seed(mix_seed(master) ^ (index + 1));
}

using RngStream = std::mt19937_64;

/// One draw of sqrt(N) x, i.e. the law standardized to E|x|^2 = 1.
inline cplx draw_standardized(EntryLaw law, RngStream& rng) {
    switch (law) {
        case EntryLaw::complex_gaussian: {
            std::normal_distribution<double> g(0.0, std::sqrt(0.5));
            const double re = g(rng);
            const double im = g(rng);
            return {re, im};
        }
        case EntryLaw::real_gaussian: {
            std::normal_distribution<double> g(0.0, 1.0);
            return {g(rng), 0.0};
        }
        case EntryLaw::rademacher: {
            return {(rng() >> 63) ? 1.0 : -1.0, 0.0};
        }
        case EntryLaw::symmetrized_exponential: {
            // Laplace(1) has variance 2
            std::exponential_distribution<double> e(1.0);
            const double mag = e(rng) / std::sqrt(2.0);
            return {(rng() >> 63) ? mag : -mag, 0.0};
        }
        case EntryLaw::zero: return {0.0, 0.0};
    }
    throw config_error("unknown entry law tag " + std::to_string(static_cast<int>(law)));
}

/// N x N matrix of iid entries with variance 1/N, filled row by row from `stream`.
inline CMatrix sample_factor(int N, EntryLaw law, RngStream& stream) {
    if (N < 1) throw config_error("sample_factor: N must be >= 1");
    (void)to_string(law);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    CMatrix m(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) m(i, j) = scale * draw_standardized(law, stream);
    return m;
}

struct FactorChain {
    std::vector<CMatrix> factors;
    EnsembleSpec spec;

    int n() const { return static_cast<int>(factors.size()); }
    int N() const { return factors.empty() ? 0 : static_cast<int>(factors.front().rows()); }

    void validate() const {
        if (factors.size() < 2) throw config_error("chain needs at least 2 factors");
        const auto dim = factors.front().rows();
        for (const auto& f : factors)
            if (f.rows() != dim || f.cols() != dim)
                throw config_error("chain factors must all be square of equal size");
    }
};

/// Factor a is drawn from RngStream(substream_seed(master_seed, a)).
inline FactorChain sample_chain(const EnsembleSpec& spec) {
    spec.validate();
    FactorChain chain{{}, spec};
    chain.factors.reserve(static_cast<std::size_t>(spec.n));
    for (int a = 0; a < spec.n; ++a) {
        RngStream stream(substream_seed(spec.master_seed, static_cast<std::uint64_t>(a)));
        chain.factors.push_back(sample_factor(spec.N, spec.entry_law, stream));
    }
    return chain;
}

/// Wraps explicit (deterministic) factors as a chain.
inline FactorChain chain_from_factors(std::vector<CMatrix> factors) {
    FactorChain chain{std::move(factors), {}};
    chain.validate();
    chain.spec = EnsembleSpec{chain.n(), chain.N(), EntryLaw::zero, 1.0, 0};
    return chain;
}

struct LinearizedSystem {
    CMatrix X;
    cplx z{0.0, 0.0};
    CMatrix Y;  // X - z I
    int n = 0;
    int N = 0;

    Eigen::Index dim() const { return X.rows(); }
    /// Global index of row i within block a (both 0-based, a taken mod n).
    Eigen::Index index(int a, int i) const {
        const int blk = ((a % n) + n) % n;
        return static_cast<Eigen::Index>(blk) * N + i;
    }
};

/// Block (a, a+1 mod n) of X holds factor a; every other block is exactly zero.
inline LinearizedSystem build_linearization(const FactorChain& chain, cplx z) {
    chain.validate();
    const int n = chain.n();
    const int N = chain.N();
    LinearizedSystem sys;
    sys.n = n;
    sys.N = N;
    sys.z = z;
    sys.X = CMatrix::Zero(static_cast<Eigen::Index>(n) * N, static_cast<Eigen::Index>(n) * N);
    for (int a = 0; a < n; ++a) {
        const int b = (a + 1) % n;
        sys.X.block(static_cast<Eigen::Index>(a) * N, static_cast<Eigen::Index>(b) * N, N, N) =
            chain.factors[static_cast<std::size_t>(a)];
    }
    sys.Y = sys.X;
    sys.Y.diagonal().array() -= z;
    return sys;
}

/// Same X, new shift.
inline LinearizedSystem reshift(const LinearizedSystem& sys, cplx z) {
    LinearizedSystem out = sys;
    out.z = z;
    out.Y = sys.X;
    out.Y.diagonal().array() -= z;
    return out;
}

/// X_1 X_2 ... X_n, multiplied left to right.
inline CMatrix build_product(const FactorChain& chain) {
    chain.validate();
    CMatrix p = chain.factors.front();
    for (std::size_t a = 1; a < chain.factors.size(); ++a) p = p * chain.factors[a];
    return p;
}

struct TailReport {
    static constexpr std::array<double, 4> grid{1.0, 2.0, 3.0, 4.0};
    std::array<double, 4> empirical{};  // P(|sqrt(N) x| > t)
    std::array<double, 4> bound{};      // theta^{-1} exp(-t^theta)
    std::array<double, 4> ratio{};
    double worst_ratio = 0.0;
    std::size_t samples = 0;
};

inline TailReport tail_decay_check(const EnsembleSpec& spec, std::size_t samples) {
    spec.validate();
    if (samples < 10000) throw config_error("tail_decay_check: needs at least 1e4 samples");
    RngStream rng(substream_seed(spec.master_seed, 0xA11CE));
    std::array<std::size_t, 4> exceed{};
    for (std::size_t s = 0; s < samples; ++s) {
        const double mag = std::abs(draw_standardized(spec.entry_law, rng));
        for (std::size_t k = 0; k < TailReport::grid.size(); ++k)
            if (mag > TailReport::grid[k]) ++exceed[k];
    }
    TailReport r;
    r.samples = samples;
    for (std::size_t k = 0; k < TailReport::grid.size(); ++k) {
        const double t = TailReport::grid[k];
        r.empirical[k] = static_cast<double>(exceed[k]) / static_cast<double>(samples);
        r.bound[k] = std::exp(-std::pow(t, spec.theta)) / spec.theta;
        r.ratio[k] = r.empirical[k] / r.bound[k];
        r.worst_ratio = std::max(r.worst_ratio, r.ratio[k]);
    }
    return r;
}

}  // namespace prodspec
