#include "hybridjd/cir_tree.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hybridjd/csv.hpp"

namespace hybridjd {

void CirParams::validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("cir.kappa must be positive");
    if (!(theta > 0.0)) throw std::invalid_argument("cir.theta must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("cir.sigma must be positive");
    if (!(y0 >= 0.0)) throw std::invalid_argument("cir.y0 must be nonnegative");
}

void TimeGrid::validate() const {
    if (!(maturity > 0.0)) throw std::invalid_argument("maturity must be positive");
    if (steps <= 0) throw std::invalid_argument("number of time steps must be positive");
}

CirTree::CirTree(CirParams params, TimeGrid grid) : params_(params), grid_(grid) {
    params_.validate();
    grid_.validate();
    h_ = grid_.step();

    const int N = grid_.steps;
    const std::size_t total = offset(N + 1);
    values_.resize(total);
    up_.assign(offset(N), 0);
    down_.assign(offset(N), 0);
    p_up_.assign(offset(N), 0.0);
    clamped_.assign(offset(N), 0);

    const double root = std::sqrt(params_.y0);
    const double half_step = 0.5 * params_.sigma * std::sqrt(h_);
    for (int n = 0; n <= N; ++n) {
        double* level = values_.data() + offset(n);
        for (int k = 0; k <= n; ++k) {
            const double base = root + half_step * (2 * k - n);
            level[k] = base > 0.0 ? base * base : 0.0;
        }
    }

    for (int n = 0; n < N; ++n) {
        const double* cur = values_.data() + offset(n);
        const double* next = values_.data() + offset(n + 1);
        for (int k = 0; k <= n; ++k) {
            const double y = cur[k];
            const double target = y + params_.drift(y) * h_;

            // smallest k* in [k+1, n+1] with target <= next[k*], else n+1
            const double* lo = next + k + 1;
            const double* hi = next + n + 2;
            const double* u = std::lower_bound(lo, hi, target);
            const int ku = u == hi ? n + 1 : static_cast<int>(u - next);

            // largest k* in [0, k] with next[k*] <= target, else 0
            const double* d = std::upper_bound(next, next + k + 1, target);
            const int kd = d == next ? 0 : static_cast<int>(d - next) - 1;

            const double y_up = next[ku];
            const double y_dn = next[kd];
            double p;
            bool clip = false;
            if (y_up > y_dn) {
                p = (target - y_dn) / (y_up - y_dn);
                if (p < 0.0) {
                    p = 0.0;
                    clip = true;
                } else if (p > 1.0) {
                    p = 1.0;
                    clip = true;
                }
            } else {
                // degenerate pair of successors; only reachable outside the small-h regime
                p = target >= y_up ? 1.0 : 0.0;
                clip = true;
            }

            const std::size_t idx = offset(n) + k;
            up_[idx] = ku;
            down_[idx] = kd;
            p_up_[idx] = p;
            clamped_[idx] = clip ? 1 : 0;
            clamp_count_ += clip ? 1 : 0;
        }
    }
}

double CirTree::theta_lower() const {
    const double r = params_.kappa * params_.theta / params_.sigma;
    return r * r;
}

double CirTree::theta_upper() const {
    return params_.sigma * params_.sigma / (4.0 * params_.kappa * params_.kappa);
}

double CirTree::c_star() const {
    const auto& p = params_;
    const double kt = p.kappa * p.theta;
    const double s2 = p.sigma * p.sigma;
    return std::max(kt + 2.0 * p.sigma * std::sqrt(theta_lower() + kt) + s2,
                    0.25 * s2 + p.sigma * std::sqrt(theta_lower()));
}

double tree_expectation(const CirTree& tree, const std::function<double(double)>& terminal) {
    const int N = tree.steps();
    std::vector<double> next(N + 1);
    std::vector<double> cur(N + 1);
    const auto last = tree.level(N);
    std::transform(last.begin(), last.end(), next.begin(), terminal);
    for (int n = N - 1; n >= 0; --n) {
        for (int k = 0; k <= n; ++k) {
            const double p = tree.p_up(n, k);
            cur[k] = p * next[tree.up(n, k)] + (1.0 - p) * next[tree.down(n, k)];
        }
        std::swap(cur, next);
    }
    return next[0];
}

double regular_second_moment(const CirParams& p, double y, double h) {
    const double s2 = p.sigma * p.sigma;
    return s2 * y * h + 0.5 * s2 * (p.drift(y) - s2 / 8.0) * h * h;
}

double regular_third_moment(const CirParams& p, double y, double h) {
    // a = sigma^2 h / 4 and b = sigma sqrt(y h) are the symmetric half-gaps of the
    // successors; expanding p_u (a + b)^3 + p_d (a - b)^3 with the drift-matching
    // p_u gives 2ab^2 - 2a^3 + (3a^2 + b^2) mu h.
    const double s2 = p.sigma * p.sigma;
    const double s4 = s2 * s2;
    return p.drift(y) * h * h * (s2 * y + 3.0 * s4 * h / 16.0) + 0.5 * s4 * y * h * h -
           s4 * s2 * h * h * h / 32.0;
}

MomentDiagnostics local_moment_diagnostics(const CirTree& tree) {
    MomentDiagnostics out;
    const auto& p = tree.params();
    const int N = tree.steps();
    const double h = tree.h();
    const double lower = tree.theta_lower() * h;
    const double upper = tree.theta_upper() / h;
    const double c_star = tree.c_star();
    const double b = p.sigma / std::sqrt(tree.theta_upper());
    const double c_dom = std::max(c_star, 0.25 * p.sigma * p.sigma) +
                         p.sigma * (p.kappa * p.theta + tree.theta_lower());
    const double h2 = h * h;

    auto rel = [](double a, double ref) {
        return std::abs(a - ref) / std::max(std::abs(ref), 1e-300);
    };

    // Law of the chain, propagated forward, for the L2 norms of the residuals.
    std::vector<double> prob{1.0};
    std::vector<double> next_prob;

    out.nodes.reserve(static_cast<std::size_t>(N) * (N + 1) / 2);
    for (int n = 0; n < N; ++n) {
        next_prob.assign(n + 2, 0.0);
        double f_sq = 0.0;
        double g_sq = 0.0;
        double j_sq = 0.0;
        for (int k = 0; k <= n; ++k) {
            NodeMoments m;
            m.n = n;
            m.k = k;
            m.y = tree.value(n, k);
            const int ku = tree.up(n, k);
            const int kd = tree.down(n, k);
            const double pu = tree.p_up(n, k);
            const double pd = 1.0 - pu;
            const double du = tree.value(n + 1, ku) - m.y;
            const double dd = tree.value(n + 1, kd) - m.y;
            m.m1 = pu * du + pd * dd;
            m.m2 = pu * du * du + pd * dd * dd;
            m.m3 = pu * du * du * du + pd * dd * dd * dd;
            m.f = m.m1 - p.drift(m.y) * h;
            m.g = m.m2 - p.sigma * p.sigma * m.y * h;
            m.clamped = tree.clamped(n, k);
            m.single_jump_band = lower <= m.y && m.y <= upper;
            m.regular = m.single_jump_band && !m.clamped && ku == k + 1 && kd == k &&
                        tree.value(n + 1, k) > 0.0;

            if (!m.clamped) {
                ++out.unclamped_nodes;
                out.max_first_moment_residual =
                    std::max(out.max_first_moment_residual, std::abs(m.f) / (1.0 + std::abs(m.y)));
            }
            if (m.single_jump_band) {
                ++out.band_nodes;
                if (ku != k + 1 || kd != k) ++out.single_jump_violations;
            }
            if (m.regular) {
                ++out.regular_nodes;
                out.max_second_moment_mismatch = std::max(
                    out.max_second_moment_mismatch, rel(m.m2, regular_second_moment(p, m.y, h)));
                out.max_third_moment_mismatch = std::max(
                    out.max_third_moment_mismatch, rel(m.m3, regular_third_moment(p, m.y, h)));
            }
            if (m.y < lower) {
                out.sub_threshold_margin = std::max(out.sub_threshold_margin, du - c_star * h);
            }
            out.dominance_margin =
                std::max(out.dominance_margin,
                         (du - p.sigma * std::sqrt(m.y * h)) - (b * m.y * h + c_dom * h));

            const double w = prob[k];
            f_sq += w * m.f * m.f;
            g_sq += w * m.g * m.g;
            j_sq += w * m.m3 * m.m3;
            next_prob[ku] += w * pu;
            next_prob[kd] += w * pd;
            out.nodes.push_back(m);
        }
        out.first_residual_norm = std::max(out.first_residual_norm, std::sqrt(f_sq) / h2);
        out.second_residual_norm = std::max(out.second_residual_norm, std::sqrt(g_sq) / h2);
        out.third_moment_norm = std::max(out.third_moment_norm, std::sqrt(j_sq) / h2);
        std::swap(prob, next_prob);
    }
    return out;
}

void write_tree_csv(std::ostream& out, const CirTree& tree) {
    out << "n,k,y,ku,kd,pu\n";
    const int N = tree.steps();
    for (int n = 0; n <= N; ++n) {
        for (int k = 0; k <= n; ++k) {
            out << n << ',' << k << ',' << format_number(tree.value(n, k)) << ',';
            if (n < N) {
                out << tree.up(n, k) << ',' << tree.down(n, k) << ','
                    << format_number(tree.p_up(n, k));
            } else {
                out << ",,";
            }
            out << '\n';
        }
    }
}

}  // namespace hybridjd
