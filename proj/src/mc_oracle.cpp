#include "hybridjd/mc_oracle.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "hybridjd/parallel.hpp"

namespace hybridjd {

void McConfig::validate() const {
    if (paths < 2) throw std::invalid_argument("mc.paths must be at least 2");
    if (steps < 1) throw std::invalid_argument("mc.steps must be positive");
    if (substeps < 1) throw std::invalid_argument("mc.substeps must be positive");
    if (threads < 1) throw std::invalid_argument("thread count must be positive");
    if (blocks < 1) throw std::invalid_argument("mc.blocks must be positive");
}

double cir_mean(const CirParams& p, double t) {
    return p.theta + (p.y0 - p.theta) * std::exp(-p.kappa * t);
}

double cir_variance(const CirParams& p, double t) {
    const double e = std::exp(-p.kappa * t);
    const double s2 = p.sigma * p.sigma;
    return p.y0 * s2 / p.kappa * (e - e * e) + p.theta * s2 / (2.0 * p.kappa) * (1.0 - e) * (1.0 - e);
}

double cir_second_moment(const CirParams& p, double t) {
    const double m = cir_mean(p, t);
    return cir_variance(p, t) + m * m;
}

double cir_laplace(const CirParams& p, double t, double u) {
    const double e = std::exp(-p.kappa * t);
    const double c = p.sigma * p.sigma * (1.0 - e) / (4.0 * p.kappa);
    const double q = 1.0 + 2.0 * u * c;
    return std::pow(q, -2.0 * p.kappa * p.theta / (p.sigma * p.sigma)) *
           std::exp(-u * p.y0 * e / q);
}

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<double> sample_cir_exact(const CirParams& params, double maturity, std::size_t count,
                                     std::uint64_t seed) {
    params.validate();
    if (!(maturity > 0.0)) throw std::invalid_argument("maturity must be positive");
    const double e = std::exp(-params.kappa * maturity);
    const double s2 = params.sigma * params.sigma;
    const double scale = s2 * (1.0 - e) / (4.0 * params.kappa);
    const double dof = 4.0 * params.kappa * params.theta / s2;
    const double noncentrality = params.y0 * e / scale;

    std::mt19937_64 rng(mix_seed(seed));
    std::poisson_distribution<long> poisson(0.5 * noncentrality);
    std::vector<double> out(count);
    for (auto& y : out) {
        const long j = noncentrality > 0.0 ? poisson(rng) : 0;
        std::gamma_distribution<double> chi(0.5 * dof + static_cast<double>(j), 2.0);
        y = scale * chi(rng);
    }
    return out;
}

namespace {

// Running mean / sum of squared deviations (Welford), merged in a fixed order.
struct Moments {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    void merge(const Moments& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double total = static_cast<double>(n + o.n);
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.n) / total;
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
        n += o.n;
    }
};

}  // namespace

std::vector<McEstimate> price_mc(const ReferenceModel& model, std::span<const Payoff> payoffs,
                                 double maturity, const McConfig& config) {
    config.validate();
    if (!(maturity > 0.0)) throw std::invalid_argument("maturity must be positive");
    const std::size_t np = payoffs.size();

    const int total_steps = config.steps * config.substeps;
    const double dt = maturity / total_steps;
    const double sqrt_dt = std::sqrt(dt);
    const auto& c = model.cir;
    const double intensity = model.gamma_x != 0.0 ? model.law.intensity() : 0.0;

    // one sample = one path, or the average of an antithetic pair
    const std::uint64_t samples = config.antithetic ? (config.paths + 1) / 2 : config.paths;
    const int blocks = static_cast<int>(std::min<std::uint64_t>(config.blocks, samples));

    std::vector<std::vector<Moments>> block_stats(blocks, std::vector<Moments>(np));

    parallel_for(blocks, config.threads, [&](int begin, int end, int) {
        std::vector<double> values(np);
        for (int b = begin; b < end; ++b) {
            std::mt19937_64 rng(mix_seed(config.seed ^ mix_seed(static_cast<std::uint64_t>(b) + 1)));
            std::normal_distribution<double> normal;
            std::exponential_distribution<double> wait(intensity > 0.0 ? intensity : 1.0);
            const std::uint64_t first = samples * b / blocks;
            const std::uint64_t last = samples * (b + 1) / blocks;
            auto& stats = block_stats[b];

            for (std::uint64_t s = first; s < last; ++s) {
                double x1 = model.x0, y1 = c.y0;
                double x2 = model.x0, y2 = c.y0;
                double next_jump = intensity > 0.0 ? wait(rng) : 2.0 * maturity + 1.0;
                for (int step = 0; step < total_steps; ++step) {
                    const double t_end = (step + 1) * dt;
                    double jump = 0.0;
                    while (next_jump < t_end) {
                        jump += model.law.sample(rng);
                        next_jump += wait(rng);
                    }
                    jump *= model.gamma_x;
                    const double z1 = normal(rng);
                    const double z2 = normal(rng);

                    const double p1 = std::max(y1, 0.0);
                    x1 += model.mu_x(p1) * dt + std::sqrt(model.sigma_x2(p1)) * sqrt_dt * z1 + jump;
                    y1 += c.kappa * (c.theta - p1) * dt + c.sigma * std::sqrt(p1) * sqrt_dt * z2;
                    if (config.antithetic) {
                        const double p2 = std::max(y2, 0.0);
                        x2 += model.mu_x(p2) * dt - std::sqrt(model.sigma_x2(p2)) * sqrt_dt * z1 +
                              jump;
                        y2 += c.kappa * (c.theta - p2) * dt - c.sigma * std::sqrt(p2) * sqrt_dt * z2;
                    }
                }
                y1 = std::max(y1, 0.0);
                y2 = std::max(y2, 0.0);
                for (std::size_t j = 0; j < np; ++j) {
                    double v = payoffs[j](x1, y1);
                    if (config.antithetic) v = 0.5 * (v + payoffs[j](x2, y2));
                    stats[j].add(v);
                }
            }
        }
    });

    std::vector<McEstimate> out(np);
    for (std::size_t j = 0; j < np; ++j) {
        Moments total;
        for (int b = 0; b < blocks; ++b) total.merge(block_stats[b][j]);
        const double n = static_cast<double>(total.n);
        const double variance = total.n > 1 ? total.m2 / (n - 1.0) : 0.0;
        out[j].mean = total.mean;
        out[j].std_error = std::sqrt(std::max(variance, 0.0) / n);
        out[j].ci95 = 1.96 * out[j].std_error;
        out[j].paths = config.antithetic ? 2 * total.n : total.n;
    }
    return out;
}

McEstimate price_mc(const ReferenceModel& model, const Payoff& payoff, double maturity,
                    const McConfig& config) {
    return price_mc(model, std::span<const Payoff>(&payoff, 1), maturity, config).front();
}

}  // namespace hybridjd
