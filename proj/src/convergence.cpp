#include "hybridjd/convergence.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "hybridjd/csv.hpp"

namespace hybridjd {

std::string_view to_string(ErrorNorm norm) {
    switch (norm) {
        case ErrorNorm::Pointwise: return "pointwise";
        case ErrorNorm::L2: return "l2";
        case ErrorNorm::Linf: return "linf";
    }
    return "?";
}

ErrorNorm parse_norm(std::string_view s) {
    if (s == "pointwise") return ErrorNorm::Pointwise;
    if (s == "l2") return ErrorNorm::L2;
    if (s == "linf") return ErrorNorm::Linf;
    throw std::invalid_argument("unknown norm '" + std::string(s) + "' (pointwise, l2, linf)");
}

double fit_slope(std::span<const double> steps, std::span<const double> errors) {
    if (steps.size() != errors.size() || steps.size() < 2) {
        throw std::invalid_argument("fit_slope: need at least two matching points");
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!(steps[i] > 0.0) || !(errors[i] > 0.0)) {
            throw std::invalid_argument("fit_slope: steps and errors must be positive");
        }
        const double x = std::log(steps[i]);
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_slope: steps are all equal");
    return (n * sxy - sx * sy) / denom;
}

ConvergenceReport make_report(std::span<const double> steps, std::span<const double> errors,
                              ErrorNorm norm) {
    if (steps.size() != errors.size()) throw std::invalid_argument("make_report: size mismatch");
    if (steps.size() < 3) throw std::invalid_argument("a convergence study needs at least 3 rows");

    ConvergenceReport r;
    r.norm = norm;
    bool all_tiny = true;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        ConvergenceRow row{steps[i], std::abs(errors[i]), std::numeric_limits<double>::quiet_NaN()};
        if (i > 0 && row.error > 0.0) row.ratio = r.rows.back().error / row.error;
        all_tiny = all_tiny && row.error < error_floor;
        r.rows.push_back(row);
    }
    if (all_tiny) return r;

    std::size_t first = 0;
    const std::size_t n = r.rows.size();
    const double asymptotic = r.rows[n - 1].ratio;
    const double coarsest = r.rows[1].ratio;
    if (n >= 4 && std::isfinite(asymptotic) && std::isfinite(coarsest) &&
        std::abs(coarsest - asymptotic) > 0.5 * std::abs(asymptotic)) {
        first = 1;
        r.dropped_coarsest = true;
    }

    std::vector<double> xs, ys;
    for (std::size_t i = first; i < n; ++i) {
        if (r.rows[i].error > 0.0) {
            xs.push_back(r.rows[i].step);
            ys.push_back(r.rows[i].error);
        }
    }
    if (xs.size() >= 2) {
        r.slope = fit_slope(xs, ys);
        r.fitted_rows = xs.size();
    }
    return r;
}

double richardson_ratio(double v_n, double v_2n, double v_4n) {
    return (v_n - v_2n) / (v_2n - v_4n);
}

double spread_ratio(double v_n, double v_2n, double v_4n) {
    return std::abs(v_n - v_4n) / std::abs(v_2n - v_4n);
}

double layer_difference(const PriceResult& coarse, const PriceResult& fine, ErrorNorm norm,
                        double window) {
    const auto& cg = coarse.grid;
    const auto& fg = fine.grid;
    if (cg.x0 != fg.x0) throw std::invalid_argument("layer_difference: grids are not centred alike");
    const double q = cg.dx / fg.dx;
    const int stride = static_cast<int>(std::lround(q));
    if (stride < 1 || std::abs(q - stride) > 1e-9 * q) {
        throw std::invalid_argument("layer_difference: fine dx must divide coarse dx");
    }
    if (norm == ErrorNorm::Pointwise) {
        return std::abs(coarse.value - fine.value);
    }
    double sum = 0.0;
    double worst = 0.0;
    int used = 0;
    for (int i = 0; i < cg.size(); ++i) {
        const int offset = i - cg.center();
        if (std::abs(offset * cg.dx) > window * (1.0 + 1e-12)) continue;
        const int j = fg.center() + stride * offset;
        if (j < 0 || j >= fg.size()) {
            throw std::invalid_argument("layer_difference: window exceeds the fine grid");
        }
        const double d = coarse.layer0[static_cast<std::size_t>(i)] - fine.layer0[static_cast<std::size_t>(j)];
        sum += d * d;
        worst = std::max(worst, std::abs(d));
        ++used;
    }
    if (used == 0) throw std::invalid_argument("layer_difference: empty window");
    return norm == ErrorNorm::L2 ? std::sqrt(cg.dx * sum) : worst;
}

void write_report_csv(std::ostream& out, const ConvergenceReport& report) {
    out << "step,error,ratio\n";
    for (const auto& row : report.rows) {
        out << format_number(row.step) << ',' << format_number(row.error) << ',';
        if (std::isfinite(row.ratio)) out << format_number(row.ratio);
        out << '\n';
    }
    out << "# norm=" << to_string(report.norm);
    if (report.slope) {
        out << " slope=" << format_number(*report.slope) << " fitted_rows=" << report.fitted_rows
            << " dropped_coarsest=" << (report.dropped_coarsest ? "true" : "false");
    } else {
        out << " slope=skipped (all errors below " << format_number(error_floor) << ")";
    }
    out << '\n';
}

}  // namespace hybridjd
