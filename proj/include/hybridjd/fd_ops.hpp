#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "hybridjd/levy.hpp"

namespace hybridjd {

/// Uniform grid x_i = x0 + (i - half_width) dx, i = 0..size()-1; x0 sits at index half_width.
struct SpatialGrid {
    double x0 = 0.0;
    double dx = 0.0;
    int half_width = 0;

    int size() const { return 2 * half_width + 1; }
    int center() const { return half_width; }
    double point(int i) const { return x0 + (i - half_width) * dx; }

    /// Smallest grid around x0 covering [x0 - width, x0 + width].
    static SpatialGrid covering(double x0, double dx, double width);
    void validate() const;
};

enum class Scheme { Centered, Upwind };

std::string_view to_string(Scheme s);
/// Accepts "centered" or "upwind"; throws std::invalid_argument otherwise.
Scheme parse_scheme(std::string_view s);

/// Implicit operator A = I - h L_diff for the frozen-coefficient drift-diffusion part.
///
/// Interior rows carry the stencil (lower, center, upper), each row summing to 1.
/// The two boundary rows are closed with a ghost value equal to the edge value
/// (homogeneous Neumann), which folds the outer coefficient into the diagonal
/// and keeps the row sum at 1.
struct TridiagonalOperator {
    Scheme scheme = Scheme::Centered;
    double alpha = 0.0;
    double beta = 0.0;
    double lower = 0.0;
    double center = 1.0;
    double upper = 0.0;
    std::vector<double> sub;    // sub[0] unused (0)
    std::vector<double> diag;
    std::vector<double> super;  // super[M-1] unused (0)

    int size() const { return static_cast<int>(diag.size()); }
};

TridiagonalOperator assemble_implicit(Scheme scheme, double mu_x, double sigma_x2, double h,
                                      const SpatialGrid& grid);
/// In-place variant reusing the storage of `op`.
void assemble_implicit(TridiagonalOperator& op, Scheme scheme, double mu_x, double sigma_x2,
                       double h, const SpatialGrid& grid);

/// Thomas elimination. `scratch` must hold size() entries; `out` may alias neither input.
void solve_implicit(const TridiagonalOperator& op, std::span<const double> rhs,
                    std::span<double> out, std::span<double> scratch);
std::vector<double> solve_implicit(const TridiagonalOperator& op, std::span<const double> rhs);

std::vector<double> multiply(const TridiagonalOperator& op, std::span<const double> v);

/// Explicit jump operator B = I + h (W - total_mass I) built from trapezoidal weights.
///
/// Values needed beyond the grid are extrapolated as the nearest edge value, so the
/// constant vector is mapped to itself as on the infinite grid.
class JumpOperator {
public:
    struct Workspace;

    JumpOperator() = default;
    /// `fast` enables FFT convolution; it is used only when the window is wide enough
    /// to pay off.
    JumpOperator(LevyQuadrature quadrature, double h, int grid_size, bool fast = false);

    const LevyQuadrature& quadrature() const { return quad_; }
    double h() const { return h_; }
    int size() const { return size_; }
    double diag_term() const { return diag_term_; }
    bool is_identity() const { return quad_.empty() || h_ == 0.0; }
    bool uses_fft() const { return static_cast<bool>(fft_); }

    /// Dispatches to the FFT path when enabled, otherwise direct summation.
    void apply(std::span<const double> v, std::span<double> out, Workspace& ws) const;
    void apply_direct(std::span<const double> v, std::span<double> out) const;
    void apply_fft(std::span<const double> v, std::span<double> out, Workspace& ws) const;

    /// Weight sums beyond the grid edges for row i.
    double left_tail(int i) const;
    double right_tail(int i) const;

    std::unique_ptr<Workspace> make_workspace() const;

private:
    struct Fft;

    LevyQuadrature quad_;
    double h_ = 0.0;
    int size_ = 0;
    double diag_term_ = 1.0;
    std::vector<double> cumulative_;  // prefix sums of the weights
    std::shared_ptr<const Fft> fft_;
};

struct JumpOperator::Workspace {
    Workspace();
    ~Workspace();
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    int length = 0;
    double* real = nullptr;
    void* spectrum = nullptr;
};

std::vector<double> apply_jump(const JumpOperator& op, std::span<const double> v);

/// Norm checks backing the stability of Pi = A^{-1} B.
///
/// The 2-norms are taken on the finite section of the infinite-grid operators
/// (values outside the grid set to zero); the infinity norms on the operators as
/// used by the scheme, boundary closure included.
struct NormReport {
    Scheme scheme = Scheme::Centered;
    double inv_a_norm2 = 0.0;        // power-iteration estimate of |A^{-1}|_2
    double inv_a_norm_inf = 0.0;     // certificate 1 / min_i (a_ii - sum_j |a_ij|)
    double b_norm2 = 0.0;            // power-iteration estimate of |B|_2
    double b_norm_inf = 0.0;         // max absolute row sum of B
    double b_bound = 1.0;            // 1 + 2 lambda c_nu h
    bool m_matrix = false;

    // Norm matching the scheme: 2 for centered, infinity for upwind.
    double inv_a_norm() const { return scheme == Scheme::Centered ? inv_a_norm2 : inv_a_norm_inf; }
    double b_norm() const { return scheme == Scheme::Centered ? b_norm2 : b_norm_inf; }
    bool passes(double slack) const {
        return inv_a_norm() <= 1.0 + slack && b_norm() <= b_bound + slack;
    }
};

NormReport operator_norm_diagnostics(const TridiagonalOperator& a, const JumpOperator& b);
/// The A half of the report; B fields are left at their identity defaults.
NormReport implicit_norm_diagnostics(const TridiagonalOperator& a);
void add_jump_norms(NormReport& report, const JumpOperator& b);

}  // namespace hybridjd
