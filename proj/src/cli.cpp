#include "hybridjd/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hybridjd/cir_tree.hpp"
#include "hybridjd/config.hpp"
#include "hybridjd/convergence.hpp"
#include "hybridjd/csv.hpp"
#include "hybridjd/hybrid.hpp"
#include "hybridjd/mc_oracle.hpp"
#include "hybridjd/parallel.hpp"

namespace hybridjd {

namespace {

// Failure of a numerical check, reported with exit code 2.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::string> scheme;
    std::optional<double> dx;
    std::optional<int> half_width;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string output;
    std::string dump_layer;

    std::string vary = "N";
    std::vector<std::string> values;
    std::string reference = "self";
    std::string target = "price";
    std::string norm = "pointwise";
    double window = 0.5;
};

RunConfig resolve_config(const Options& o) {
    std::vector<std::string> overrides = o.sets;
    if (o.scheme) overrides.push_back("scheme.kind=" + *o.scheme);
    if (o.dx) overrides.push_back("scheme.dx=" + format_number(*o.dx));
    if (o.half_width) overrides.push_back("scheme.half_width=" + std::to_string(*o.half_width));
    if (o.steps) overrides.push_back("scheme.steps=" + std::to_string(*o.steps));
    if (o.seed) overrides.push_back("mc.seed=" + std::to_string(*o.seed));
    return o.config_path.empty() ? default_config(overrides) : load_config(o.config_path, overrides);
}

std::string jump_description(const JumpLaw& law) {
    std::ostringstream s;
    if (const auto* m = std::get_if<MertonJumps>(&law.shape())) {
        s << "jumps=merton lambda=" << format_number(law.intensity()) << " m=" << format_number(m->mean)
          << " delta=" << format_number(m->stddev);
    } else if (const auto* k = std::get_if<KouJumps>(&law.shape())) {
        s << "jumps=kou lambda=" << format_number(law.intensity()) << " p=" << format_number(k->p_up)
          << " eta1=" << format_number(k->eta_up) << " eta2=" << format_number(k->eta_down);
    } else {
        s << "jumps=none";
    }
    return s.str();
}

// Comment line naming every input that affects the numbers of a run.
std::string parameter_line(std::string_view command, const RunConfig& c) {
    const auto& m = c.market;
    std::ostringstream s;
    s << "# command=" << command << " model=" << (m.gamma == 1 ? "bates" : "heston")
      << " s0=" << format_number(m.s0) << " rate=" << format_number(m.rate)
      << " dividend=" << format_number(m.dividend) << " rho=" << format_number(m.rho)
      << " maturity=" << format_number(c.maturity) << " kappa=" << format_number(m.cir.kappa)
      << " theta=" << format_number(m.cir.theta) << " sigma=" << format_number(m.cir.sigma)
      << " y0=" << format_number(m.cir.y0) << ' ' << jump_description(m.jumps)
      << " compensate=" << (m.compensate ? "true" : "false") << " payoff=" << to_string(c.payoff)
      << " strike=" << format_number(c.strike) << " discount=" << (c.discount ? "true" : "false");
    return s.str();
}

std::string scheme_line(const SchemeConfig& s) {
    std::ostringstream out;
    out << " scheme=" << to_string(s.scheme) << " N=" << s.time.steps << " dx=" << format_number(s.space.dx)
        << " half_width=" << s.space.half_width;
    return out.str();
}

std::string mc_line(const McConfig& mc) {
    std::ostringstream out;
    out << " mc_paths=" << mc.paths << " mc_steps=" << mc.steps << " mc_substeps=" << mc.substeps
        << " seed=" << mc.seed << " antithetic=" << (mc.antithetic ? "true" : "false")
        << " blocks=" << mc.blocks;
    return out.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

void write_gnuplot(const std::string& data_path, const std::string& title, const std::string& xlabel,
                   const std::string& ylabel, bool loglog) {
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set title '" << title << "'\n"
       << "set xlabel '" << xlabel << "'\n"
       << "set ylabel '" << ylabel << "'\n";
    if (loglog) gp << "set logscale xy\n";
    gp << "plot '" << data_path << "' using 1:2 with linespoints\n";
    write_file(data_path + ".gp", gp.str());
}

std::string number_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += format_number(v[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------

std::string cmd_price(const Options& o, const RunConfig& c, int threads) {
    const auto model = to_reference(c.market);
    const auto scheme = scheme_config(c, model, threads);
    const auto result = price(model, make_payoff(c, model), scheme);
    if (!std::isfinite(result.value)) throw NumericalFailure("price is not finite");

    std::ostringstream out;
    out << parameter_line("price", c) << scheme_line(scheme) << '\n';
    out << "scheme,N,dx,half_width,value,clamp_count,normA_inv,normB\n";
    out << to_string(scheme.scheme) << ',' << scheme.time.steps << ',' << format_number(scheme.space.dx)
        << ',' << scheme.space.half_width << ',' << format_number(result.value) << ','
        << result.clamp_count << ',' << format_number(result.norms->inv_a_norm()) << ','
        << format_number(result.norms->b_norm()) << '\n';

    if (!o.dump_layer.empty()) {
        std::ostringstream layer;
        layer << parameter_line("price", c) << scheme_line(scheme) << '\n' << "x,value\n";
        for (int i = 0; i < result.grid.size(); ++i) {
            layer << format_number(result.grid.point(i)) << ','
                  << format_number(result.layer0[static_cast<std::size_t>(i)]) << '\n';
        }
        write_file(o.dump_layer, layer.str());
        write_gnuplot(o.dump_layer, "value at t = 0, y = y0", "x", "value", false);
    }
    return out.str();
}

std::string cmd_tree_dump(const RunConfig& c) {
    const CirTree tree(c.market.cir, TimeGrid{c.maturity, c.steps});
    std::ostringstream out;
    out << parameter_line("tree-dump", c) << " N=" << c.steps << '\n';
    write_tree_csv(out, tree);
    return out.str();
}

std::string cmd_mc_price(const RunConfig& c, int threads) {
    const auto model = to_reference(c.market);
    McConfig mc = c.mc;
    mc.threads = threads;
    const auto e = price_mc(model, make_payoff(c, model), c.maturity, mc);
    if (!std::isfinite(e.mean)) throw NumericalFailure("Monte Carlo estimate is not finite");
    std::ostringstream out;
    out << parameter_line("mc-price", c) << mc_line(mc) << '\n';
    out << "mean,std_error,ci95,paths,substeps,seed\n";
    out << format_number(e.mean) << ',' << format_number(e.std_error) << ',' << format_number(e.ci95)
        << ',' << e.paths << ',' << mc.substeps << ',' << mc.seed << '\n';
    return out.str();
}

struct Check {
    std::string name;
    double value;
    double threshold;
    std::string status;  // pass, fail, skipped
};

std::string cmd_diagnose(const RunConfig& c, int threads, bool& failed) {
    const auto model = to_reference(c.market);
    const auto scheme = scheme_config(c, model, threads);
    const CirTree tree(c.market.cir, scheme.time);
    const auto moments = local_moment_diagnostics(tree);

    std::vector<Check> checks;
    auto add = [&](std::string name, double value, double threshold, bool ok, bool skip = false) {
        checks.push_back({std::move(name), value, threshold, skip ? "skipped" : (ok ? "pass" : "fail")});
    };
    const double nan = std::numeric_limits<double>::quiet_NaN();

    add("tree_clamp_count", static_cast<double>(tree.clamp_count()), 0.0, tree.clamp_count() == 0);
    add("tree_first_moment", moments.max_first_moment_residual, 1e-12,
        moments.max_first_moment_residual <= 1e-12);
    const bool no_regular = moments.regular_nodes == 0;
    add("tree_second_moment", moments.max_second_moment_mismatch, 1e-10,
        moments.max_second_moment_mismatch <= 1e-10, no_regular);
    add("tree_third_moment", moments.max_third_moment_mismatch, 1e-10,
        moments.max_third_moment_mismatch <= 1e-10, no_regular);
    add("tree_single_jump_violations", static_cast<double>(moments.single_jump_violations), 0.0,
        moments.single_jump_violations == 0);
    add("tree_sub_threshold_margin", moments.sub_threshold_margin, 0.0,
        moments.sub_threshold_margin <= 1e-12);

    const auto jumps = make_jump_operator(model, scheme);
    const auto norms = sampled_norms(tree, model, scheme, jumps);
    // power-iteration estimate for centered; the upwind certificate is exact up to round-off
    const double a_limit = scheme.scheme == Scheme::Centered ? 1.0 + 1e-6 : 1.0 + 1e-12;
    add(scheme.scheme == Scheme::Centered ? "inv_a_norm2" : "inv_a_norm_inf", norms.inv_a_norm(),
        a_limit, norms.inv_a_norm() <= a_limit);
    add("a_m_matrix", norms.m_matrix ? 1.0 : 0.0, 1.0, norms.m_matrix, scheme.scheme != Scheme::Upwind);

    const bool no_jumps = jumps.is_identity();
    add(scheme.scheme == Scheme::Centered ? "b_norm2" : "b_norm_inf", norms.b_norm(),
        norms.b_bound + 1e-6, norms.b_norm() <= norms.b_bound + 1e-6, no_jumps);
    if (no_jumps) {
        add("quadrature_mass", nan, nan, true, true);
    } else {
        const auto& q = jumps.quadrature();
        const double bound = quadrature_error_bound(q.law, q.gamma_x, q.dx);
        const double err = std::abs(q.total_mass - q.law.intensity());
        // the truncated tail is part of the gap by construction
        add("quadrature_mass", err, bound + q.truncated_mass, err <= bound + q.truncated_mass);
    }

    std::ostringstream out;
    out << parameter_line("diagnose", c) << scheme_line(scheme) << '\n';
    out << "check,value,threshold,status\n";
    for (const auto& ch : checks) {
        out << ch.name << ',' << (std::isnan(ch.value) ? "" : format_number(ch.value)) << ','
            << (std::isnan(ch.threshold) ? "" : format_number(ch.threshold)) << ',' << ch.status << '\n';
        failed = failed || ch.status == "fail";
    }
    return out.str();
}

// ---------------------------------------------------------------------------

std::vector<double> parse_values(const std::vector<std::string>& raw) {
    std::vector<double> v;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            try {
                std::size_t used = 0;
                v.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("--values", "not a number: '" + tok + "'");
            }
        }
    }
    return v;
}

std::string cmd_converge(const Options& o, const RunConfig& base, int threads) {
    const auto values = parse_values(o.values);
    if (values.size() < 3) throw ConfigError("--values", "a sweep needs at least 3 values");
    if (o.vary != "N" && o.vary != "dx") throw ConfigError("--vary", "expected N or dx");
    if (o.reference != "self" && o.reference != "mc" && o.reference != "exact") {
        throw ConfigError("--reference", "expected self, mc or exact");
    }
    ErrorNorm norm;
    try {
        norm = parse_norm(o.norm);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("--norm", e.what());
    }
    const bool cir_target = o.target != "price";
    if (cir_target && o.target != "cir-mean" && o.target != "cir-second" && o.target != "cir-laplace") {
        throw ConfigError("--target", "expected price, cir-mean, cir-second or cir-laplace");
    }
    if (cir_target && o.vary != "N") throw ConfigError("--vary", "lattice targets only vary N");
    if ((cir_target || o.reference == "mc") && norm != ErrorNorm::Pointwise) {
        throw ConfigError("--norm", "only the pointwise norm applies to this reference/target");
    }
    if (o.reference == "self" && values.size() < 4) {
        throw ConfigError("--values", "self-convergence needs at least 4 values (3 differences)");
    }
    for (double v : values) {
        if (!(v > 0.0)) throw ConfigError("--values", "values must be positive");
        if (o.vary == "N" && (v != std::floor(v) || v > 1e7)) {
            throw ConfigError("--values", "N values must be positive integers");
        }
    }

    const auto model = to_reference(base.market);
    std::vector<double> steps;
    std::vector<double> errors;
    std::ostringstream header;
    header << parameter_line("converge", base) << " vary=" << o.vary << " values=" << number_list(values)
           << " reference=" << o.reference << " target=" << o.target << " norm=" << o.norm;

    if (cir_target) {
        const auto& cir = base.market.cir;
        std::function<double(double)> f;
        double exact = 0.0;
        if (o.target == "cir-mean") {
            f = [](double y) { return y; };
            exact = cir_mean(cir, base.maturity);
        } else if (o.target == "cir-second") {
            f = [](double y) { return y * y; };
            exact = cir_second_moment(cir, base.maturity);
        } else {
            f = [](double y) { return std::exp(-y); };
            exact = cir_laplace(cir, base.maturity, 1.0);
        }
        if (o.reference == "mc") {
            const auto ys = sample_cir_exact(cir, base.maturity, base.mc.paths, base.mc.seed);
            double sum = 0.0;
            for (double y : ys) sum += f(y);
            exact = sum / static_cast<double>(ys.size());
            header << mc_line(base.mc);
        }
        std::vector<double> v;
        for (double n : values) {
            const CirTree tree(cir, TimeGrid{base.maturity, static_cast<int>(n)});
            v.push_back(tree_expectation(tree, f));
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (o.reference == "self") {
                if (i + 1 == v.size()) break;
                errors.push_back(v[i] - v[i + 1]);
            } else {
                errors.push_back(v[i] - exact);
            }
            steps.push_back(base.maturity / values[i]);
        }
    } else {
        const auto payoff = make_payoff(base, model);
        std::vector<PriceResult> results;
        std::optional<SchemeConfig> first_scheme;
        for (double v : values) {
            RunConfig c = base;
            if (o.vary == "N") {
                c.steps = static_cast<int>(v);
            } else {
                c.dx = v;
                // keep the domain fixed across the sweep
                if (c.half_width) {
                    c.half_width = static_cast<int>(std::ceil(*base.half_width * base.dx / v - 1e-9));
                }
            }
            auto s = scheme_config(c, model, threads);
            if (o.vary == "dx" && !base.half_width) {
                s.space = SpatialGrid::covering(model.x0, v, default_half_width(model, base.maturity));
            }
            s.diagnostics = false;
            if (!first_scheme) first_scheme = s;
            results.push_back(price(model, payoff, s));
            if (!std::isfinite(results.back().value)) throw NumericalFailure("price is not finite");
            steps.push_back(o.vary == "N" ? base.maturity / v : v);
        }
        header << " scheme=" << to_string(base.scheme);
        if (o.vary == "N") {
            header << " dx=" << format_number(first_scheme->space.dx)
                   << " half_width=" << first_scheme->space.half_width;
        } else {
            header << " N=" << base.steps;
        }
        if (norm != ErrorNorm::Pointwise) header << " window=" << format_number(o.window);

        if (o.reference == "self") {
            steps.pop_back();
            for (std::size_t i = 0; i + 1 < results.size(); ++i) {
                errors.push_back(layer_difference(results[i], results[i + 1], norm, o.window));
            }
        } else {
            double ref = 0.0;
            if (o.reference == "mc") {
                McConfig mc = base.mc;
                mc.threads = threads;
                ref = price_mc(model, payoff, base.maturity, mc).mean;
                header << mc_line(mc);
            } else if (base.payoff == PayoffKind::Constant) {
                ref = 1.0;
            } else if (base.payoff == PayoffKind::Asset && base.discount &&
                       (base.market.gamma == 0 || base.market.compensate || !base.market.jumps.active())) {
                ref = base.market.s0 * std::exp(-base.market.dividend * base.maturity);
            } else {
                throw NumericalFailure("no exact reference is available for this payoff and model");
            }
            if (norm != ErrorNorm::Pointwise) {
                throw ConfigError("--norm", "layer norms need reference=self");
            }
            for (const auto& r : results) errors.push_back(r.value - ref);
        }
    }

    const auto report = make_report(steps, errors, norm);
    std::ostringstream out;
    out << header.str() << '\n';
    write_report_csv(out, report);
    return out.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hybrid tree / finite-difference pricer for Heston and Bates models"};
    app.require_subcommand(1);
    Options o;
    o.threads = default_threads();

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "INI configuration file");
        sub->add_option("--set", o.sets, "Override, section.key=value (repeatable)");
        sub->add_option("--scheme", o.scheme, "centered or upwind");
        sub->add_option("--dx", o.dx, "Spatial step");
        sub->add_option("--half-width", o.half_width, "Grid points on each side of x0");
        sub->add_option("--steps", o.steps, "Number of time steps N");
        sub->add_option("--threads", o.threads, "Worker threads (default HYBRIDJD_THREADS)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "Monte Carlo seed");
        sub->add_option("--output", o.output, "Write the CSV here instead of stdout");
    };

    auto* price_cmd = app.add_subcommand("price", "Price with the hybrid scheme");
    add_common(price_cmd);
    price_cmd->add_option("--dump-layer", o.dump_layer, "Write u(t=0, x, y0) over the grid");

    auto* converge_cmd = app.add_subcommand("converge", "Convergence-order study");
    add_common(converge_cmd);
    converge_cmd->add_option("--vary", o.vary, "N or dx");
    converge_cmd->add_option("--values", o.values, "Sweep values, coarse to fine")->required();
    converge_cmd->add_option("--reference", o.reference, "self, mc or exact");
    converge_cmd->add_option("--target", o.target, "price, cir-mean, cir-second or cir-laplace");
    converge_cmd->add_option("--norm", o.norm, "pointwise, l2 or linf");
    converge_cmd->add_option("--window", o.window, "Half-width of the interior window for l2/linf");

    auto* diagnose_cmd = app.add_subcommand("diagnose", "Lattice, operator and quadrature checks");
    add_common(diagnose_cmd);
    auto* tree_cmd = app.add_subcommand("tree-dump", "Dump the CIR lattice");
    add_common(tree_cmd);
    auto* mc_cmd = app.add_subcommand("mc-price", "Monte Carlo reference price");
    add_common(mc_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
    }

    try {
        const RunConfig config = resolve_config(o);
        std::string csv;
        bool failed = false;
        if (*price_cmd) {
            csv = cmd_price(o, config, o.threads);
        } else if (*converge_cmd) {
            csv = cmd_converge(o, config, o.threads);
            if (!o.output.empty()) {
                write_file(o.output, csv);
                write_gnuplot(o.output, "convergence", o.vary == "N" ? "h" : "dx", "error", true);
                return exit_ok;
            }
        } else if (*diagnose_cmd) {
            csv = cmd_diagnose(config, o.threads, failed);
        } else if (*tree_cmd) {
            csv = cmd_tree_dump(config);
        } else {
            csv = cmd_mc_price(config, o.threads);
        }
        if (o.output.empty()) {
            out << csv;
        } else {
            write_file(o.output, csv);
        }
        if (failed) {
            err << "diagnose: at least one check failed\n";
            return exit_numerical;
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_usage;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_numerical;
    }
}

}  // namespace hybridjd
