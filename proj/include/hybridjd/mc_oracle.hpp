#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hybridjd/cir_tree.hpp"
#include "hybridjd/models.hpp"

namespace hybridjd {

struct McConfig {
    std::uint64_t paths = 100'000;
    int steps = 4;        // coarse steps over [0, T]
    int substeps = 64;    // Euler substeps per coarse step
    std::uint64_t seed = 42;
    bool antithetic = true;
    int threads = 1;
    // Paths are simulated in this many independently seeded blocks; the estimate
    // depends on (seed, paths, blocks) only, never on the thread count.
    int blocks = 64;

    void validate() const;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double ci95 = 0.0;
    std::uint64_t paths = 0;
};

// Closed-form CIR references.
double cir_mean(const CirParams& p, double t);
double cir_variance(const CirParams& p, double t);
double cir_second_moment(const CirParams& p, double t);
/// E[exp(-u Y_t)], u >= 0.
double cir_laplace(const CirParams& p, double t, double u);

/// Exact draws of Y_T: a scaled noncentral chi-square with 4 kappa theta / sigma^2
/// degrees of freedom, sampled as a Poisson mixture of central chi-squares.
std::vector<double> sample_cir_exact(const CirParams& params, double maturity, std::size_t count,
                                     std::uint64_t seed);

/// Full-truncation Euler for Y, frozen-coefficient Euler for X, compound Poisson jumps
/// placed by exponential waiting times. All payoffs are evaluated on the same paths.
std::vector<McEstimate> price_mc(const ReferenceModel& model, std::span<const Payoff> payoffs,
                                 double maturity, const McConfig& config);
McEstimate price_mc(const ReferenceModel& model, const Payoff& payoff, double maturity,
                    const McConfig& config);

/// Mixes a 64-bit seed (splitmix64 finaliser); used to derive per-block seeds.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace hybridjd
