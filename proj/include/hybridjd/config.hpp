#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hybridjd/fd_ops.hpp"
#include "hybridjd/hybrid.hpp"
#include "hybridjd/mc_oracle.hpp"
#include "hybridjd/models.hpp"

namespace hybridjd {

/// Bad or unknown configuration entry; key() is "section.name" when one is to blame.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class PayoffKind { Call, Put, Smooth, Constant, Asset };

/// Everything a run needs. Sections and keys of the INI file:
///
///   [market] s0 rate dividend rho maturity model(heston|bates) compensate
///            payoff(call|put|smooth|constant|asset) strike discount
///   [cir]    kappa theta sigma y0
///   [jumps]  kind(none|merton|kou) lambda m delta p eta1 eta2
///   [scheme] kind(centered|upwind) steps dx half_width tail_tol fast_convolution
///   [mc]     paths steps substeps seed antithetic blocks
struct RunConfig {
    BatesParams market;
    double maturity = 1.0;
    PayoffKind payoff = PayoffKind::Call;
    double strike = 1.0;
    bool discount = true;

    Scheme scheme = Scheme::Centered;
    int steps = 100;
    double dx = 0.01;
    std::optional<int> half_width;  // grid points each side; default sizing when empty
    double tail_tol = 0.0;
    bool fast_convolution = true;

    McConfig mc;
};

/// Parses INI text, then applies "section.key=value" overrides in order.
RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
/// Defaults only (Heston call of the worked example), plus overrides.
RunConfig default_config(const std::vector<std::string>& overrides = {});

std::string_view to_string(PayoffKind kind);

/// call/put: discounted (S - K)^+ / (K - S)^+; asset: discounted S (when `discount`);
/// smooth: exp(-(x - x0)^2); constant: 1.
Payoff make_payoff(const RunConfig& config, const ReferenceModel& model);

SchemeConfig scheme_config(const RunConfig& config, const ReferenceModel& model, int threads);

}  // namespace hybridjd
