#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hybridjd/cir_tree.hpp"
#include "hybridjd/fd_ops.hpp"
#include "hybridjd/models.hpp"

namespace hybridjd {

struct SchemeConfig {
    TimeGrid time;
    SpatialGrid space;
    Scheme scheme = Scheme::Centered;
    double tail_tol = 0.0;  // 0 selects 1e-12 * lambda
    bool diagnostics = true;
    int threads = 1;
    bool fast_convolution = true;

    void validate() const;
};

/// Half-width of the x-domain: drift bound plus six standard deviations of the
/// diffusion and jump parts over [0, T], evaluated at a high variance level.
double default_half_width(const ReferenceModel& model, double maturity);

/// Grid centred at model.x0 with the default half-width rounded up to a multiple of dx.
SpatialGrid default_grid(const ReferenceModel& model, double maturity, double dx);

/// Values u_n(x_i, y(n, k)) for every tree node k of one time level.
class ValueLayer {
public:
    ValueLayer(int level, int grid_size)
        : level_(level),
          grid_size_(grid_size),
          data_(static_cast<std::size_t>(level + 1) * grid_size) {}

    int level() const { return level_; }
    int nodes() const { return level_ + 1; }
    int grid_size() const { return grid_size_; }

    std::span<double> node(int k) {
        return {data_.data() + static_cast<std::size_t>(k) * grid_size_,
                static_cast<std::size_t>(grid_size_)};
    }
    std::span<const double> node(int k) const {
        return {data_.data() + static_cast<std::size_t>(k) * grid_size_,
                static_cast<std::size_t>(grid_size_)};
    }

private:
    int level_;
    int grid_size_;
    std::vector<double> data_;
};

ValueLayer terminal_layer(const Payoff& payoff, const SpatialGrid& grid, const CirTree& tree);

/// Jump operator for the scheme's grid and time step. B depends on y only through
/// gamma_x, which is constant for the reference models, so one operator serves
/// every node.
JumpOperator make_jump_operator(const ReferenceModel& model, const SchemeConfig& config);

/// One step of the backward recursion: for each node (n, k), mix the two successor
/// vectors with the tree probabilities, then apply A(y)^{-1} B.
ValueLayer backward_step(const ValueLayer& next, const CirTree& tree, const ReferenceModel& model,
                         const SchemeConfig& config, const JumpOperator& jumps);
ValueLayer backward_step(const ValueLayer& next, const CirTree& tree, const ReferenceModel& model,
                         const SchemeConfig& config);

struct PriceResult {
    double value = 0.0;
    std::vector<double> layer0;  // u_0(x_i, Y0) over the grid
    SpatialGrid grid;
    std::size_t clamp_count = 0;
    double c_nu = 1.0;
    // Worst norms over a sample of tree nodes; empty when diagnostics are off.
    std::optional<NormReport> norms;
};

/// Worst operator norms over the root and the bottom, middle and top nodes of
/// levels N/2 and N-1.
NormReport sampled_norms(const CirTree& tree, const ReferenceModel& model,
                         const SchemeConfig& config, const JumpOperator& jumps);

PriceResult price(const ReferenceModel& model, const Payoff& payoff, const SchemeConfig& config);
/// Same, reusing an already built lattice (must match config.time and model.cir).
PriceResult price(const ReferenceModel& model, const Payoff& payoff, const SchemeConfig& config,
                  const CirTree& tree);

}  // namespace hybridjd
