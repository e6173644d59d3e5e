#pragma once

#include <functional>

#include "hybridjd/cir_tree.hpp"
#include "hybridjd/levy.hpp"

namespace hybridjd {

/// Heston (gamma = 0) or Bates (gamma = 1) market under the pricing measure.
struct BatesParams {
    double s0 = 1.0;
    double rate = 0.0;
    double dividend = 0.0;
    double rho = 0.0;
    CirParams cir;
    JumpLaw jumps;
    int gamma = 0;
    /// Subtract lambda E[J~] from the asset drift so that the discounted asset is a
    /// martingale in the presence of jumps.
    bool compensate = true;

    void validate() const;
};

/// Frozen-coefficient description of X consumed by the hybrid scheme:
/// dX = mu_x(Y) dt + sqrt(sigma_x2(Y)) dB + gamma_x dH, with Y a CIR process.
struct ReferenceModel {
    std::function<double(double)> mu_x;
    std::function<double(double)> sigma_x2;
    double gamma_x = 0.0;
    JumpLaw law;
    double x0 = 0.0;
    CirParams cir;

    // Affine drift mu_x(y) = drift_intercept + drift_slope * y, when known.
    double drift_intercept = 0.0;
    double drift_slope = 0.0;
    double diffusion_slope = 1.0;  // sigma_x2(y) = diffusion_slope * y
};

/// X = log S - (rho / sigma) Y removes the correlation between the two Brownian drivers.
ReferenceModel to_reference(const BatesParams& params);

using Payoff = std::function<double(double x, double y)>;

/// f(x, y) = e^{-r T} phi(exp(x + (rho / sigma) y)), the discount factor applied when
/// `discount` is set.
Payoff transform_payoff(std::function<double(double)> phi, const BatesParams& params,
                        bool discount, double maturity);

/// S = exp(x + (rho / sigma) y).
double asset_price(const BatesParams& params, double x, double y);

}  // namespace hybridjd
