#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybridjd/hybrid.hpp"

namespace hybridjd {

enum class ErrorNorm { Pointwise, L2, Linf };

std::string_view to_string(ErrorNorm norm);
ErrorNorm parse_norm(std::string_view s);

struct ConvergenceRow {
    double step = 0.0;   // h or dx
    double error = 0.0;
    double ratio = 0.0;  // error of the previous (coarser) row / this error; NaN on the first row
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;  // coarsest first
    ErrorNorm norm = ErrorNorm::Pointwise;
    // Least-squares slope of log(error) against log(step); empty when every
    // error sits below error_floor and there is nothing to fit.
    std::optional<double> slope;
    bool dropped_coarsest = false;
    std::size_t fitted_rows = 0;
};

inline constexpr double error_floor = 1e-10;

double fit_slope(std::span<const double> steps, std::span<const double> errors);

/// Needs at least 3 rows. The coarsest row is left out of the fit when its ratio
/// departs by more than 50% from the ratio of the two finest rows and at least
/// three rows remain.
ConvergenceReport make_report(std::span<const double> steps, std::span<const double> errors,
                              ErrorNorm norm);

/// (v_N - v_2N) / (v_2N - v_4N), about 2^p for order p in the halved parameter.
double richardson_ratio(double v_n, double v_2n, double v_4n);
/// |v_N - v_4N| / |v_2N - v_4N|, about 2^p + 1 for order p (3 at first order).
double spread_ratio(double v_n, double v_2n, double v_4n);

/// Distance between two layer0 vectors on the coarse grid points, restricted to
/// |x - x0| <= window. The fine grid must share x0 and have dx = coarse dx / 2^j.
/// L2 is the discrete norm sqrt(dx * sum d_i^2); Pointwise compares the values at x0.
double layer_difference(const PriceResult& coarse, const PriceResult& fine, ErrorNorm norm,
                        double window);

/// CSV "step,error,ratio", followed by a comment line carrying the fit.
void write_report_csv(std::ostream& out, const ConvergenceReport& report);

}  // namespace hybridjd
