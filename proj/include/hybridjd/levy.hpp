#pragma once

#include <random>
#include <variant>
#include <vector>

namespace hybridjd {

/// Normal jump sizes J ~ N(mean, stddev^2) in log coordinates.
struct MertonJumps {
    double mean = 0.0;
    double stddev = 1.0;
};

/// Double-exponential jump sizes: rate eta_up on the positive side with
/// probability p_up, rate eta_down on the negative side otherwise.
struct KouJumps {
    double p_up = 0.5;
    double eta_up = 10.0;
    double eta_down = 5.0;
};

/// Compound Poisson jump law: intensity lambda and the density of J = log(1 + J~).
/// The Levy density is nu(x) = lambda * density(x).
class JumpLaw {
public:
    using Shape = std::variant<std::monostate, MertonJumps, KouJumps>;

    JumpLaw() = default;

    static JumpLaw none();
    static JumpLaw merton(double intensity, double mean, double stddev);
    static JumpLaw kou(double intensity, double p_up, double eta_up, double eta_down);

    const Shape& shape() const { return shape_; }
    bool is_none() const { return std::holds_alternative<std::monostate>(shape_); }
    bool is_kou() const { return std::holds_alternative<KouJumps>(shape_); }

    /// Intensity used downstream; zero for the None variant.
    double intensity() const { return is_none() ? 0.0 : intensity_; }
    bool active() const { return intensity() > 0.0; }

    double density(double x) const;
    double nu(double x) const { return intensity() * density(x); }
    /// Second derivative of nu away from 0 (Kou has a kink there).
    double nu_second(double x) const;

    /// lambda * P(|J| > a), a >= 0.
    double tail_mass(double a) const;

    /// E[e^J] - 1, i.e. the mean relative jump E[J~].
    double mean_relative_jump() const;

    /// |nu''|_{L1}, computed numerically and cached at construction.
    /// For Kou this is the sum over the two smooth half-lines.
    double nu_second_l1() const { return nu_second_l1_; }

    template <class Rng>
    double sample(Rng& rng) const;

private:
    JumpLaw(Shape shape, double intensity);

    Shape shape_{};
    double intensity_ = 0.0;
    double nu_second_l1_ = 0.0;
};

double density(const JumpLaw& law, double x);

/// Trapezoidal weights w_l = nu_y(l dx) dx on a symmetric window |l| <= half_window,
/// where nu_y(x) = nu(x / gamma) / |gamma| is the Levy density seen on the x grid.
struct LevyQuadrature {
    JumpLaw law;
    double gamma_x = 0.0;
    double dx = 0.0;
    int half_window = 0;
    std::vector<double> weights;  // index l + half_window
    double total_mass = 0.0;
    double truncated_mass = 0.0;  // lambda mass outside the window
    double c_nu = 0.0;            // 1 + dx^2 |nu''|_{L1} / (12 eps^2 lambda), eps = |gamma_x|

    bool empty() const { return weights.empty(); }
    double weight(int l) const { return weights[static_cast<std::size_t>(l + half_window)]; }
    double center_weight() const { return empty() ? 0.0 : weight(0); }
};

/// Throws std::invalid_argument for dx <= 0 or for gamma_x == 0 with active jumps.
LevyQuadrature build_quadrature(const JumpLaw& law, double gamma_x, double dx, double tail_tol);

/// Default truncation tolerance 1e-12 * lambda.
LevyQuadrature build_quadrature(const JumpLaw& law, double gamma_x, double dx);

/// (dx^2 / (12 gamma^2)) |nu''|_{L1}; for Kou the kink at 0 is added as the
/// first-order term dx/2 * |nu(0+) - nu(0-)| on top of the piecewise bound,
/// which is a heuristic rather than a proven bound.
double quadrature_error_bound(const JumpLaw& law, double gamma_x, double dx);

template <class Rng>
double JumpLaw::sample(Rng& rng) const {
    if (const auto* m = std::get_if<MertonJumps>(&shape_)) {
        return std::normal_distribution<double>(m->mean, m->stddev)(rng);
    }
    if (const auto* k = std::get_if<KouJumps>(&shape_)) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (u < k->p_up) return std::exponential_distribution<double>(k->eta_up)(rng);
        return -std::exponential_distribution<double>(k->eta_down)(rng);
    }
    return 0.0;
}

}  // namespace hybridjd
