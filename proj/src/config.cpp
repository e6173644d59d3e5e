#include "hybridjd/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hybridjd {

namespace pt = boost::property_tree;

namespace {

double to_double(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ConfigError(key, "expected a number, got '" + text + "'");
    }
    return v;
}

long long to_integer(const std::string& key, const std::string& text) {
    long long v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw ConfigError(key, "expected an integer, got '" + text + "'");
    return v;
}

int to_int(const std::string& key, const std::string& text) {
    const long long v = to_integer(key, text);
    if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(key, "value out of range");
    return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "on" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "off" || text == "0" || text == "no") return false;
    throw ConfigError(key, "expected true/false, got '" + text + "'");
}

// Validation messages of the parameter structs start with the offending key.
ConfigError keyed(const std::invalid_argument& e) {
    const std::string what = e.what();
    const auto space = what.find(' ');
    if (space == std::string::npos) return ConfigError("", what);
    return ConfigError(what.substr(0, space), what.substr(space + 1));
}

struct JumpSettings {
    std::string kind = "none";
    double lambda = 0.0;
    double m = 0.0;
    double delta = 0.1;
    double p = 0.5;
    double eta1 = 10.0;
    double eta2 = 5.0;
};

struct Builder {
    RunConfig config;
    JumpSettings jumps;
    std::string model = "heston";
    std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;

    Builder() {
        auto& c = config;
        c.market.s0 = 1.0;
        c.market.rate = 0.05;
        c.market.rho = -0.5;
        c.market.cir = CirParams{2.0, 0.04, 0.2, 0.04};

        auto num = [](double& field) {
            return [&field](const std::string& k, const std::string& v) { field = to_double(k, v); };
        };
        auto integer = [](int& field) {
            return [&field](const std::string& k, const std::string& v) { field = to_int(k, v); };
        };
        auto flag = [](bool& field) {
            return [&field](const std::string& k, const std::string& v) { field = to_bool(k, v); };
        };

        setters["market.s0"] = num(c.market.s0);
        setters["market.rate"] = num(c.market.rate);
        setters["market.dividend"] = num(c.market.dividend);
        setters["market.rho"] = num(c.market.rho);
        setters["market.maturity"] = num(c.maturity);
        setters["market.strike"] = num(c.strike);
        setters["market.compensate"] = flag(c.market.compensate);
        setters["market.discount"] = flag(c.discount);
        setters["market.model"] = [this](const std::string& k, const std::string& v) {
            if (v != "heston" && v != "bates") throw ConfigError(k, "expected heston or bates, got '" + v + "'");
            model = v;
        };
        setters["market.payoff"] = [this](const std::string& k, const std::string& v) {
            static const std::map<std::string, PayoffKind> kinds{
                {"call", PayoffKind::Call},         {"put", PayoffKind::Put},
                {"smooth", PayoffKind::Smooth},     {"constant", PayoffKind::Constant},
                {"asset", PayoffKind::Asset}};
            const auto it = kinds.find(v);
            if (it == kinds.end()) throw ConfigError(k, "unknown payoff '" + v + "'");
            config.payoff = it->second;
        };

        setters["cir.kappa"] = num(c.market.cir.kappa);
        setters["cir.theta"] = num(c.market.cir.theta);
        setters["cir.sigma"] = num(c.market.cir.sigma);
        setters["cir.y0"] = num(c.market.cir.y0);

        setters["jumps.kind"] = [this](const std::string& k, const std::string& v) {
            if (v != "none" && v != "merton" && v != "kou") {
                throw ConfigError(k, "expected none, merton or kou, got '" + v + "'");
            }
            jumps.kind = v;
        };
        setters["jumps.lambda"] = num(jumps.lambda);
        setters["jumps.m"] = num(jumps.m);
        setters["jumps.delta"] = num(jumps.delta);
        setters["jumps.p"] = num(jumps.p);
        setters["jumps.eta1"] = num(jumps.eta1);
        setters["jumps.eta2"] = num(jumps.eta2);

        setters["scheme.kind"] = [this](const std::string& k, const std::string& v) {
            try {
                config.scheme = parse_scheme(v);
            } catch (const std::invalid_argument&) {
                throw ConfigError(k, "expected centered or upwind, got '" + v + "'");
            }
        };
        setters["scheme.steps"] = integer(c.steps);
        setters["scheme.dx"] = num(c.dx);
        setters["scheme.half_width"] = [this](const std::string& k, const std::string& v) {
            if (v == "auto") {
                config.half_width.reset();
            } else {
                config.half_width = to_int(k, v);
            }
        };
        setters["scheme.tail_tol"] = num(c.tail_tol);
        setters["scheme.fast_convolution"] = flag(c.fast_convolution);

        setters["mc.paths"] = [this](const std::string& k, const std::string& v) {
            const long long n = to_integer(k, v);
            if (n < 2) throw ConfigError(k, "must be at least 2");
            config.mc.paths = static_cast<std::uint64_t>(n);
        };
        setters["mc.steps"] = integer(c.mc.steps);
        setters["mc.substeps"] = integer(c.mc.substeps);
        setters["mc.seed"] = [this](const std::string& k, const std::string& v) {
            std::uint64_t s = 0;
            const auto* end = v.data() + v.size();
            const auto [ptr, ec] = std::from_chars(v.data(), end, s);
            if (ec != std::errc{} || ptr != end) throw ConfigError(k, "expected an unsigned integer");
            config.mc.seed = s;
        };
        setters["mc.antithetic"] = flag(c.mc.antithetic);
        setters["mc.blocks"] = integer(c.mc.blocks);
    }

    void set(const std::string& key, const std::string& value) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(key, "unknown configuration key");
        it->second(key, value);
    }

    RunConfig finish() {
        auto& c = config;
        c.market.gamma = model == "bates" ? 1 : 0;
        try {
            if (jumps.kind == "merton") {
                c.market.jumps = JumpLaw::merton(jumps.lambda, jumps.m, jumps.delta);
            } else if (jumps.kind == "kou") {
                c.market.jumps = JumpLaw::kou(jumps.lambda, jumps.p, jumps.eta1, jumps.eta2);
            } else {
                c.market.jumps = JumpLaw::none();
            }
        } catch (const std::invalid_argument& e) {
            throw keyed(e);
        }
        if (!(c.maturity > 0.0)) throw ConfigError("market.maturity", "must be positive");
        if (c.steps < 1) throw ConfigError("scheme.steps", "must be positive");
        if (!(c.dx > 0.0)) throw ConfigError("scheme.dx", "must be positive");
        if (c.half_width && *c.half_width < 1) throw ConfigError("scheme.half_width", "must be positive");
        if (c.tail_tol < 0.0) throw ConfigError("scheme.tail_tol", "must be nonnegative");
        if (c.mc.steps < 1) throw ConfigError("mc.steps", "must be positive");
        if (c.mc.substeps < 1) throw ConfigError("mc.substeps", "must be positive");
        if (c.mc.blocks < 1) throw ConfigError("mc.blocks", "must be positive");
        try {
            c.market.validate();
        } catch (const std::invalid_argument& e) {
            throw keyed(e);
        }
        return c;
    }
};

void apply_overrides(Builder& b, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError(o, "override must look like section.key=value");
        const std::string key = o.substr(0, eq);
        if (key.find('.') == std::string::npos) {
            throw ConfigError(key, "override key must look like section.key");
        }
        b.set(key, o.substr(eq + 1));
    }
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::vector<std::string>& overrides) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", "malformed config (line " + std::to_string(e.line()) + "): " + e.message());
    }
    Builder b;
    for (const auto& [section, entries] : tree) {
        if (entries.empty() && !entries.data().empty()) {
            throw ConfigError(section, "entry outside of a section");
        }
        for (const auto& [name, value] : entries) b.set(section + "." + name, value.data());
    }
    apply_overrides(b, overrides);
    return b.finish();
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    return parse_config(in, overrides);
}

RunConfig default_config(const std::vector<std::string>& overrides) {
    std::istringstream empty;
    return parse_config(empty, overrides);
}

std::string_view to_string(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::Call: return "call";
        case PayoffKind::Put: return "put";
        case PayoffKind::Smooth: return "smooth";
        case PayoffKind::Constant: return "constant";
        case PayoffKind::Asset: return "asset";
    }
    return "?";
}

Payoff make_payoff(const RunConfig& config, const ReferenceModel& model) {
    const double k = config.strike;
    switch (config.payoff) {
        case PayoffKind::Call:
            return transform_payoff([k](double s) { return std::max(s - k, 0.0); }, config.market,
                                    config.discount, config.maturity);
        case PayoffKind::Put:
            return transform_payoff([k](double s) { return std::max(k - s, 0.0); }, config.market,
                                    config.discount, config.maturity);
        case PayoffKind::Asset:
            return transform_payoff([](double s) { return s; }, config.market, config.discount,
                                    config.maturity);
        case PayoffKind::Smooth: {
            const double x0 = model.x0;
            return [x0](double x, double) { return std::exp(-(x - x0) * (x - x0)); };
        }
        case PayoffKind::Constant:
            return [](double, double) { return 1.0; };
    }
    throw std::logic_error("unhandled payoff kind");
}

SchemeConfig scheme_config(const RunConfig& config, const ReferenceModel& model, int threads) {
    SchemeConfig s;
    s.time = TimeGrid{config.maturity, config.steps};
    s.space = config.half_width ? SpatialGrid{model.x0, config.dx, *config.half_width}
                                : default_grid(model, config.maturity, config.dx);
    s.scheme = config.scheme;
    s.tail_tol = config.tail_tol;
    s.fast_convolution = config.fast_convolution;
    s.threads = threads;
    return s;
}

}  // namespace hybridjd
