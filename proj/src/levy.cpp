#include "hybridjd/levy.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hybridjd {

namespace {

double integrate_abs(const auto& f, double a, double b) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate([&](double x) { return std::abs(f(x)); }, a, b,
                                                 15, 1e-13);
}

double merton_second_l1(const JumpLaw& law, const MertonJumps& m) {
    // |nu''| changes sign at mean +- stddev; integrate each piece separately
    const auto f = [&](double x) { return law.nu_second(x); };
    const double lo = m.mean - 14.0 * m.stddev;
    const double hi = m.mean + 14.0 * m.stddev;
    return integrate_abs(f, lo, m.mean - m.stddev) +
           integrate_abs(f, m.mean - m.stddev, m.mean + m.stddev) +
           integrate_abs(f, m.mean + m.stddev, hi);
}

double kou_second_l1(const JumpLaw& law, const KouJumps& k) {
    const auto f = [&](double x) { return law.nu_second(x); };
    return integrate_abs(f, 0.0, 60.0 / k.eta_up) + integrate_abs(f, -60.0 / k.eta_down, 0.0);
}

}  // namespace

JumpLaw::JumpLaw(Shape shape, double intensity) : shape_(shape), intensity_(intensity) {
    if (!(intensity >= 0.0)) throw std::invalid_argument("jumps.lambda must be nonnegative");
    if (const auto* m = std::get_if<MertonJumps>(&shape_)) {
        if (!(m->stddev > 0.0)) throw std::invalid_argument("jumps.delta must be positive");
        nu_second_l1_ = merton_second_l1(*this, *m);
    } else if (const auto* k = std::get_if<KouJumps>(&shape_)) {
        if (!(k->p_up >= 0.0 && k->p_up <= 1.0))
            throw std::invalid_argument("jumps.p must lie in [0, 1]");
        if (!(k->eta_up > 1.0)) throw std::invalid_argument("jumps.eta1 must exceed 1");
        if (!(k->eta_down > 0.0)) throw std::invalid_argument("jumps.eta2 must be positive");
        nu_second_l1_ = kou_second_l1(*this, *k);
    }
}

JumpLaw JumpLaw::none() { return JumpLaw(std::monostate{}, 0.0); }

JumpLaw JumpLaw::merton(double intensity, double mean, double stddev) {
    return JumpLaw(MertonJumps{mean, stddev}, intensity);
}

JumpLaw JumpLaw::kou(double intensity, double p_up, double eta_up, double eta_down) {
    return JumpLaw(KouJumps{p_up, eta_up, eta_down}, intensity);
}

double JumpLaw::density(double x) const {
    if (const auto* m = std::get_if<MertonJumps>(&shape_)) {
        const double z = (x - m->mean) / m->stddev;
        return std::exp(-0.5 * z * z) / (m->stddev * std::sqrt(2.0 * std::numbers::pi));
    }
    if (const auto* k = std::get_if<KouJumps>(&shape_)) {
        if (x >= 0.0) return k->p_up * k->eta_up * std::exp(-k->eta_up * x);
        return (1.0 - k->p_up) * k->eta_down * std::exp(k->eta_down * x);
    }
    return 0.0;
}

double JumpLaw::nu_second(double x) const {
    if (const auto* m = std::get_if<MertonJumps>(&shape_)) {
        const double z = (x - m->mean) / m->stddev;
        return intensity() * (z * z - 1.0) * density(x) / (m->stddev * m->stddev);
    }
    if (const auto* k = std::get_if<KouJumps>(&shape_)) {
        const double eta = x >= 0.0 ? k->eta_up : k->eta_down;
        return intensity() * eta * eta * density(x);
    }
    return 0.0;
}

double JumpLaw::tail_mass(double a) const {
    if (const auto* m = std::get_if<MertonJumps>(&shape_)) {
        const double s = m->stddev * std::numbers::sqrt2;
        return 0.5 * intensity() * (std::erfc((a + m->mean) / s) + std::erfc((a - m->mean) / s));
    }
    if (const auto* k = std::get_if<KouJumps>(&shape_)) {
        return intensity() * (k->p_up * std::exp(-k->eta_up * a) +
                              (1.0 - k->p_up) * std::exp(-k->eta_down * a));
    }
    return 0.0;
}

double JumpLaw::mean_relative_jump() const {
    if (const auto* m = std::get_if<MertonJumps>(&shape_)) {
        return std::expm1(m->mean + 0.5 * m->stddev * m->stddev);
    }
    if (const auto* k = std::get_if<KouJumps>(&shape_)) {
        return k->p_up * k->eta_up / (k->eta_up - 1.0) +
               (1.0 - k->p_up) * k->eta_down / (k->eta_down + 1.0) - 1.0;
    }
    return 0.0;
}

double density(const JumpLaw& law, double x) { return law.density(x); }

LevyQuadrature build_quadrature(const JumpLaw& law, double gamma_x, double dx, double tail_tol) {
    if (!(dx > 0.0)) throw std::invalid_argument("grid spacing dx must be positive");
    LevyQuadrature q;
    q.law = law;
    q.gamma_x = gamma_x;
    q.dx = dx;
    q.c_nu = 1.0;
    if (!law.active()) return q;
    if (gamma_x == 0.0) {
        throw std::invalid_argument("jump scale gamma_x is zero while the jump intensity is positive");
    }
    if (!(tail_tol > 0.0)) throw std::invalid_argument("tail tolerance must be positive");

    const double scale = std::abs(gamma_x);
    const auto tail = [&](long l) { return law.tail_mass(static_cast<double>(l) * dx / scale); };

    constexpr long max_window = 50'000'000;
    long hi = 1;
    while (tail(hi) >= tail_tol) {
        hi *= 2;
        if (hi > max_window) throw std::invalid_argument("jump window too large for dx");
    }
    long lo = hi / 2;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        (tail(mid) < tail_tol ? hi : lo) = mid;
    }
    q.half_window = static_cast<int>(hi);
    q.truncated_mass = tail(hi);

    q.weights.resize(2 * static_cast<std::size_t>(q.half_window) + 1);
    for (int l = -q.half_window; l <= q.half_window; ++l) {
        const double w = law.nu(l * dx / gamma_x) / scale * dx;
        q.weights[static_cast<std::size_t>(l + q.half_window)] = w;
    }
    // summed from the tails inward so that the symmetric case is order independent
    double total = 0.0;
    for (int l = q.half_window; l >= 1; --l) total += q.weight(-l) + q.weight(l);
    q.total_mass = total + q.weight(0);
    q.c_nu = 1.0 + dx * dx * law.nu_second_l1() / (12.0 * scale * scale * law.intensity());
    return q;
}

LevyQuadrature build_quadrature(const JumpLaw& law, double gamma_x, double dx) {
    return build_quadrature(law, gamma_x, dx, 1e-12 * law.intensity());
}

double quadrature_error_bound(const JumpLaw& law, double gamma_x, double dx) {
    if (!law.active() || gamma_x == 0.0) return 0.0;
    const double g2 = gamma_x * gamma_x;
    double bound = dx * dx / (12.0 * g2) * law.nu_second_l1();
    if (law.is_kou()) {
        const double kink = std::abs(law.nu(0.0) - law.nu(-1e-300));
        bound += 0.5 * dx / std::abs(gamma_x) * kink;
    }
    return bound;
}

}  // namespace hybridjd
