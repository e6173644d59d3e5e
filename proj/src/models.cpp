#include "hybridjd/models.hpp"

#include <cmath>
#include <stdexcept>

namespace hybridjd {

void BatesParams::validate() const {
    if (!(s0 > 0.0)) throw std::invalid_argument("market.s0 must be positive");
    if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("market.rho must lie in (-1, 1)");
    if (gamma != 0 && gamma != 1) throw std::invalid_argument("market.gamma must be 0 or 1");
    cir.validate();
}

ReferenceModel to_reference(const BatesParams& params) {
    params.validate();
    const auto& c = params.cir;
    const double ratio = params.rho / c.sigma;

    ReferenceModel m;
    m.cir = c;
    m.x0 = std::log(params.s0) - ratio * c.y0;
    m.gamma_x = params.gamma;
    m.law = params.gamma == 1 ? params.jumps : JumpLaw::none();

    const double compensator =
        params.compensate ? m.gamma_x * m.law.intensity() * m.law.mean_relative_jump() : 0.0;
    m.drift_intercept = params.rate - params.dividend - ratio * c.kappa * c.theta - compensator;
    m.drift_slope = ratio * c.kappa - 0.5;
    m.diffusion_slope = 1.0 - params.rho * params.rho;

    const double r = params.rate - params.dividend - compensator;
    const double kappa = c.kappa;
    const double theta = c.theta;
    m.mu_x = [=](double y) { return r - 0.5 * y - ratio * kappa * (theta - y); };
    const double slope = m.diffusion_slope;
    m.sigma_x2 = [=](double y) { return slope * std::max(y, 0.0); };
    return m;
}

Payoff transform_payoff(std::function<double(double)> phi, const BatesParams& params,
                        bool discount, double maturity) {
    const double ratio = params.rho / params.cir.sigma;
    const double df = discount ? std::exp(-params.rate * maturity) : 1.0;
    return [phi = std::move(phi), ratio, df](double x, double y) {
        return df * phi(std::exp(x + ratio * y));
    };
}

double asset_price(const BatesParams& params, double x, double y) {
    return std::exp(x + params.rho / params.cir.sigma * y);
}

}  // namespace hybridjd
