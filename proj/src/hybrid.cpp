#include "hybridjd/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hybridjd/parallel.hpp"

namespace hybridjd {

void SchemeConfig::validate() const {
    time.validate();
    space.validate();
    if (tail_tol < 0.0) throw std::invalid_argument("scheme.tail_tol must be nonnegative");
    if (threads < 1) throw std::invalid_argument("thread count must be positive");
}

double default_half_width(const ReferenceModel& model, double maturity) {
    const auto& c = model.cir;
    const double base = std::max(c.y0, c.theta);
    const double y_high = base + 3.0 * std::sqrt(c.sigma * c.sigma * base / (2.0 * c.kappa));
    const double drift =
        maturity * std::max(std::abs(model.mu_x(0.0)), std::abs(model.mu_x(y_high)));
    double variance = model.sigma_x2(y_high) * maturity;
    if (model.law.active() && model.gamma_x != 0.0) {
        double second = 0.0;
        if (const auto* m = std::get_if<MertonJumps>(&model.law.shape())) {
            second = m->mean * m->mean + m->stddev * m->stddev;
        } else if (const auto* k = std::get_if<KouJumps>(&model.law.shape())) {
            second = 2.0 * k->p_up / (k->eta_up * k->eta_up) +
                     2.0 * (1.0 - k->p_up) / (k->eta_down * k->eta_down);
        }
        variance += model.law.intensity() * model.gamma_x * model.gamma_x * second * maturity;
    }
    return drift + 6.0 * std::sqrt(variance);
}

SpatialGrid default_grid(const ReferenceModel& model, double maturity, double dx) {
    return SpatialGrid::covering(model.x0, dx, default_half_width(model, maturity));
}

ValueLayer terminal_layer(const Payoff& payoff, const SpatialGrid& grid, const CirTree& tree) {
    const int N = tree.steps();
    ValueLayer layer(N, grid.size());
    for (int k = 0; k <= N; ++k) {
        const double y = tree.value(N, k);
        auto v = layer.node(k);
        for (int i = 0; i < grid.size(); ++i) v[i] = payoff(grid.point(i), y);
    }
    return layer;
}

JumpOperator make_jump_operator(const ReferenceModel& model, const SchemeConfig& config) {
    const double tol = config.tail_tol > 0.0 ? config.tail_tol : 1e-12 * model.law.intensity();
    if (!model.law.active() || model.gamma_x == 0.0) {
        return JumpOperator(LevyQuadrature{}, config.time.step(), config.space.size());
    }
    auto quad = build_quadrature(model.law, model.gamma_x, config.space.dx, tol);
    return JumpOperator(std::move(quad), config.time.step(), config.space.size(),
                        config.fast_convolution);
}

namespace {

struct StepWorkspace {
    std::vector<double> mix;
    std::vector<double> rhs;
    std::vector<double> scratch;
    TridiagonalOperator op;
    std::unique_ptr<JumpOperator::Workspace> jump;

    StepWorkspace(int m, const JumpOperator& jumps)
        : mix(m), rhs(m), scratch(m), jump(jumps.make_workspace()) {}
};

}  // namespace

ValueLayer backward_step(const ValueLayer& next, const CirTree& tree, const ReferenceModel& model,
                         const SchemeConfig& config, const JumpOperator& jumps) {
    const int n = next.level() - 1;
    if (n < 0) throw std::invalid_argument("backward_step: no level below 0");
    const int m = next.grid_size();
    if (m != config.space.size() || jumps.size() != m) {
        throw std::invalid_argument("backward_step: grid size mismatch");
    }
    const double h = tree.h();
    ValueLayer out(n, m);

    parallel_for(n + 1, config.threads, [&](int begin, int end, int) {
        StepWorkspace ws(m, jumps);
        for (int k = begin; k < end; ++k) {
            const double y = tree.value(n, k);
            const double pu = tree.p_up(n, k);
            const double pd = 1.0 - pu;
            const auto up = next.node(tree.up(n, k));
            const auto dn = next.node(tree.down(n, k));
            for (int i = 0; i < m; ++i) ws.mix[i] = pu * up[i] + pd * dn[i];

            jumps.apply(ws.mix, ws.rhs, *ws.jump);
            assemble_implicit(ws.op, config.scheme, model.mu_x(y), model.sigma_x2(y), h,
                              config.space);
            solve_implicit(ws.op, ws.rhs, out.node(k), ws.scratch);
        }
    });
    return out;
}

ValueLayer backward_step(const ValueLayer& next, const CirTree& tree, const ReferenceModel& model,
                         const SchemeConfig& config) {
    return backward_step(next, tree, model, config, make_jump_operator(model, config));
}

NormReport sampled_norms(const CirTree& tree, const ReferenceModel& model,
                         const SchemeConfig& config, const JumpOperator& jumps) {
    const int N = tree.steps();
    std::vector<double> ys{tree.value(0, 0)};
    for (int n : {N / 2, N - 1}) {
        if (n <= 0) continue;
        ys.push_back(tree.value(n, 0));
        ys.push_back(tree.value(n, n / 2));
        ys.push_back(tree.value(n, n));
    }
    NormReport worst;
    bool first = true;
    for (double y : ys) {
        const auto a = assemble_implicit(config.scheme, model.mu_x(y), model.sigma_x2(y), tree.h(),
                                         config.space);
        NormReport r = implicit_norm_diagnostics(a);
        if (first) {
            worst = r;
            first = false;
            continue;
        }
        worst.inv_a_norm2 = std::max(worst.inv_a_norm2, r.inv_a_norm2);
        worst.inv_a_norm_inf = std::max(worst.inv_a_norm_inf, r.inv_a_norm_inf);
        worst.m_matrix = worst.m_matrix && r.m_matrix;
    }
    // B does not depend on y
    add_jump_norms(worst, jumps);
    return worst;
}

PriceResult price(const ReferenceModel& model, const Payoff& payoff, const SchemeConfig& config,
                  const CirTree& tree) {
    config.validate();
    if (tree.steps() != config.time.steps) {
        throw std::invalid_argument("price: lattice and scheme disagree on the number of steps");
    }
    const JumpOperator jumps = make_jump_operator(model, config);

    ValueLayer layer = terminal_layer(payoff, config.space, tree);
    for (int n = tree.steps() - 1; n >= 0; --n) {
        layer = backward_step(layer, tree, model, config, jumps);
    }

    PriceResult result;
    const auto v = layer.node(0);
    result.layer0.assign(v.begin(), v.end());
    result.value = result.layer0[static_cast<std::size_t>(config.space.center())];
    result.grid = config.space;
    result.clamp_count = tree.clamp_count();
    result.c_nu = jumps.is_identity() ? 1.0 : jumps.quadrature().c_nu;
    if (config.diagnostics) result.norms = sampled_norms(tree, model, config, jumps);
    return result;
}

PriceResult price(const ReferenceModel& model, const Payoff& payoff, const SchemeConfig& config) {
    config.validate();
    const CirTree tree(model.cir, config.time);
    return price(model, payoff, config, tree);
}

}  // namespace hybridjd
