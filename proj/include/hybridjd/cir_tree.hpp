#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace hybridjd {

/// Parameters of the square-root process dY = kappa (theta - Y) dt + sigma sqrt(Y) dW.
///
/// The Feller condition 2 kappa theta >= sigma^2 is reported by feller() but is
/// never required: the tree and every scheme built on it work when Y reaches 0.
struct CirParams {
    double kappa = 0.0;
    double theta = 0.0;
    double sigma = 0.0;
    double y0 = 0.0;

    double drift(double y) const { return kappa * (theta - y); }
    bool feller() const { return 2.0 * kappa * theta >= sigma * sigma; }

    /// Throws std::invalid_argument unless kappa, theta, sigma > 0 and y0 >= 0.
    void validate() const;
};

struct TimeGrid {
    double maturity = 0.0;
    int steps = 0;

    double step() const { return maturity / steps; }
    void validate() const;
};

/// Recombining binomial lattice for the CIR process with multiple jumps.
///
/// Level n holds n+1 nodes y(n, k) = (sqrt(y0) + sigma/2 (2k - n) sqrt(h))^2,
/// truncated at zero when the base is not positive. From node (n, k) the chain
/// moves to up(n, k) with probability p_up(n, k) and to down(n, k) otherwise;
/// the successor indices are chosen so that the local mean matches the CIR
/// drift, skipping neighbours when needed.
///
/// Immutable after construction.
class CirTree {
public:
    CirTree(CirParams params, TimeGrid grid);

    const CirParams& params() const { return params_; }
    const TimeGrid& grid() const { return grid_; }
    int steps() const { return grid_.steps; }
    double h() const { return h_; }

    double value(int n, int k) const { return values_[offset(n) + k]; }
    std::span<const double> level(int n) const {
        return {values_.data() + offset(n), static_cast<std::size_t>(n + 1)};
    }

    // Transition data, defined for n < steps().
    int up(int n, int k) const { return up_[offset(n) + k]; }
    int down(int n, int k) const { return down_[offset(n) + k]; }
    double p_up(int n, int k) const { return p_up_[offset(n) + k]; }
    bool clamped(int n, int k) const { return clamped_[offset(n) + k] != 0; }

    /// Number of nodes where the raw up-probability left [0, 1] and was clipped.
    std::size_t clamp_count() const { return clamp_count_; }

    // Thresholds delimiting the single-jump band [theta_lower h, theta_upper / h]
    // and the bound C_* on up-moves below it.
    double theta_lower() const;
    double theta_upper() const;
    double c_star() const;

private:
    static std::size_t offset(int n) {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2;
    }

    CirParams params_;
    TimeGrid grid_;
    double h_;
    std::vector<double> values_;
    std::vector<int> up_;
    std::vector<int> down_;
    std::vector<double> p_up_;
    std::vector<unsigned char> clamped_;
    std::size_t clamp_count_ = 0;
};

/// E[f(Y^h_N)] by exact backward induction over the lattice.
double tree_expectation(const CirTree& tree, const std::function<double(double)>& terminal);

struct NodeMoments {
    int n = 0;
    int k = 0;
    double y = 0.0;
    double m1 = 0.0;  // E[dY], dY = Y_{n+1} - y
    double m2 = 0.0;  // E[dY^2]
    double m3 = 0.0;  // E[dY^3]
    double f = 0.0;   // m1 - mu_Y(y) h
    double g = 0.0;   // m2 - sigma^2 y h
    bool clamped = false;
    bool single_jump_band = false;  // theta_lower h <= y <= theta_upper / h
    // In the band with both successors strictly positive, so that the
    // successors sit at y + sigma^2 h/4 +- sigma sqrt(y h).
    bool regular = false;
};

struct MomentDiagnostics {
    std::vector<NodeMoments> nodes;

    std::size_t unclamped_nodes = 0;
    std::size_t band_nodes = 0;
    std::size_t regular_nodes = 0;

    // max |f| / (1 + |y|) over unclamped nodes.
    double max_first_moment_residual = 0.0;
    // Relative mismatch of m2, m3 against their closed forms on regular nodes.
    double max_second_moment_mismatch = 0.0;
    double max_third_moment_mismatch = 0.0;
    // Band nodes that did not resolve to single jumps.
    std::size_t single_jump_violations = 0;
    // max (y_up - y) - C_* h over nodes below theta_lower h (<= 0 when the bound holds).
    double sub_threshold_margin = -1.0;
    // max of (y_up - y - sigma sqrt(y h)) - (b y h + C h) over all nodes.
    double dominance_margin = -1.0;
    // Discrete l2 norms over the lattice of f/h^2, g/h^2 and m3/h^2 (p = 2).
    double first_residual_norm = 0.0;
    double second_residual_norm = 0.0;
    double third_moment_norm = 0.0;
};

/// Closed forms for the second and third local moments at a regular node.
double regular_second_moment(const CirParams& p, double y, double h);
double regular_third_moment(const CirParams& p, double y, double h);

MomentDiagnostics local_moment_diagnostics(const CirTree& tree);

/// CSV with header n,k,y,ku,kd,pu; transition columns are empty on the last level.
void write_tree_csv(std::ostream& out, const CirTree& tree);

}  // namespace hybridjd
