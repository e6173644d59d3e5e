#include "hybridjd/fd_ops.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hybridjd {

SpatialGrid SpatialGrid::covering(double x0, double dx, double width) {
    SpatialGrid g{x0, dx, 1};
    g.validate();
    g.half_width = std::max(1, static_cast<int>(std::ceil(width / dx - 1e-9)));
    return g;
}

void SpatialGrid::validate() const {
    if (!(dx > 0.0)) throw std::invalid_argument("grid spacing dx must be positive");
    if (half_width < 1) throw std::invalid_argument("grid half-width must be at least 1");
}

std::string_view to_string(Scheme s) { return s == Scheme::Centered ? "centered" : "upwind"; }

Scheme parse_scheme(std::string_view s) {
    if (s == "centered") return Scheme::Centered;
    if (s == "upwind") return Scheme::Upwind;
    throw std::invalid_argument("unknown scheme '" + std::string(s) + "' (expected centered|upwind)");
}

void assemble_implicit(TridiagonalOperator& op, Scheme scheme, double mu_x, double sigma_x2,
                       double h, const SpatialGrid& grid) {
    if (sigma_x2 < 0.0) throw std::invalid_argument("sigma_x^2 must be nonnegative");
    if (h < 0.0) throw std::invalid_argument("time step must be nonnegative");
    grid.validate();

    op.scheme = scheme;
    const double dx = grid.dx;
    op.beta = h * sigma_x2 / (2.0 * dx * dx);
    if (scheme == Scheme::Centered) {
        op.alpha = h * mu_x / (2.0 * dx);
        op.lower = op.alpha - op.beta;
        op.center = 1.0 + 2.0 * op.beta;
        op.upper = -op.alpha - op.beta;
    } else {
        op.alpha = h * mu_x / dx;
        const double a = std::abs(op.alpha);
        op.lower = -op.beta - (op.alpha < 0.0 ? a : 0.0);
        op.center = 1.0 + 2.0 * op.beta + a;
        op.upper = -op.beta - (op.alpha > 0.0 ? a : 0.0);
    }

    const int m = grid.size();
    op.sub.assign(m, op.lower);
    op.diag.assign(m, op.center);
    op.super.assign(m, op.upper);
    // ghost value = edge value on both sides
    op.diag.front() += op.lower;
    op.sub.front() = 0.0;
    op.diag.back() += op.upper;
    op.super.back() = 0.0;
}

TridiagonalOperator assemble_implicit(Scheme scheme, double mu_x, double sigma_x2, double h,
                                      const SpatialGrid& grid) {
    TridiagonalOperator op;
    assemble_implicit(op, scheme, mu_x, sigma_x2, h, grid);
    return op;
}

void solve_implicit(const TridiagonalOperator& op, std::span<const double> rhs,
                    std::span<double> out, std::span<double> scratch) {
    const std::size_t m = op.diag.size();
    if (rhs.size() != m || out.size() != m || scratch.size() < m) {
        throw std::invalid_argument("solve_implicit: size mismatch");
    }
    auto pivot_check = [](double p) {
        if (!(std::abs(p) > 1e-300)) throw std::runtime_error("solve_implicit: singular pivot");
    };
    double pivot = op.diag[0];
    pivot_check(pivot);
    scratch[0] = op.super[0] / pivot;
    out[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < m; ++i) {
        pivot = op.diag[i] - op.sub[i] * scratch[i - 1];
        pivot_check(pivot);
        scratch[i] = op.super[i] / pivot;
        out[i] = (rhs[i] - op.sub[i] * out[i - 1]) / pivot;
    }
    for (std::size_t i = m - 1; i-- > 0;) out[i] -= scratch[i] * out[i + 1];
}

std::vector<double> solve_implicit(const TridiagonalOperator& op, std::span<const double> rhs) {
    std::vector<double> out(op.diag.size());
    std::vector<double> scratch(op.diag.size());
    solve_implicit(op, rhs, out, scratch);
    return out;
}

std::vector<double> multiply(const TridiagonalOperator& op, std::span<const double> v) {
    const std::size_t m = op.diag.size();
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = op.diag[i] * v[i];
        if (i > 0) s += op.sub[i] * v[i - 1];
        if (i + 1 < m) s += op.super[i] * v[i + 1];
        out[i] = s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JumpOperator

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct JumpOperator::Fft {
    int length = 0;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::vector<std::complex<double>> kernel;

    ~Fft() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

JumpOperator::Workspace::Workspace() = default;

JumpOperator::Workspace::~Workspace() {
    if (real) fftw_free(real);
    if (spectrum) fftw_free(spectrum);
}

JumpOperator::JumpOperator(LevyQuadrature quadrature, double h, int grid_size, bool fast)
    : quad_(std::move(quadrature)), h_(h), size_(grid_size) {
    if (h < 0.0) throw std::invalid_argument("time step must be nonnegative");
    if (grid_size < 1) throw std::invalid_argument("grid size must be positive");
    if (quad_.empty()) return;

    diag_term_ = 1.0 + h_ * (quad_.center_weight() - quad_.total_mass);
    cumulative_.resize(quad_.weights.size() + 1, 0.0);
    std::partial_sum(quad_.weights.begin(), quad_.weights.end(), cumulative_.begin() + 1);

    const int L = quad_.half_window;
    if (!fast || L < 32) return;

    auto fft = std::make_shared<Fft>();
    int length = 1;
    while (length < size_ + 2 * L) length *= 2;
    fft->length = length;
    const int bins = length / 2 + 1;

    std::lock_guard lock(planner_mutex());
    double* real = fftw_alloc_real(length);
    fftw_complex* spec = fftw_alloc_complex(bins);
    fft->forward = fftw_plan_dft_r2c_1d(length, real, spec, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fft->backward = fftw_plan_dft_c2r_1d(length, spec, real, FFTW_ESTIMATE | FFTW_UNALIGNED);

    // kernel g[j] = w_{L - j}, so (v * g)[i + L] = sum_l w_l v[i + l]
    std::fill(real, real + length, 0.0);
    for (int j = 0; j <= 2 * L; ++j) real[j] = quad_.weight(L - j);
    fftw_execute_dft_r2c(fft->forward, real, spec);
    fft->kernel.resize(bins);
    for (int b = 0; b < bins; ++b) fft->kernel[b] = {spec[b][0] / length, spec[b][1] / length};
    fftw_free(real);
    fftw_free(spec);
    fft_ = std::move(fft);
}

double JumpOperator::left_tail(int i) const {
    if (quad_.empty()) return 0.0;
    const int L = quad_.half_window;
    return i >= L ? 0.0 : cumulative_[static_cast<std::size_t>(L - i)];
}

double JumpOperator::right_tail(int i) const {
    if (quad_.empty()) return 0.0;
    const int L = quad_.half_window;
    const int first = size_ - i + L;  // weight position of l = size - i
    const std::size_t end = cumulative_.size() - 1;
    if (first >= static_cast<int>(end)) return 0.0;
    return cumulative_[end] - cumulative_[static_cast<std::size_t>(first)];
}

std::unique_ptr<JumpOperator::Workspace> JumpOperator::make_workspace() const {
    auto ws = std::make_unique<Workspace>();
    if (fft_) {
        ws->length = fft_->length;
        ws->real = fftw_alloc_real(fft_->length);
        ws->spectrum = fftw_alloc_complex(fft_->length / 2 + 1);
    }
    return ws;
}

void JumpOperator::apply(std::span<const double> v, std::span<double> out, Workspace& ws) const {
    if (fft_ && !is_identity()) {
        apply_fft(v, out, ws);
    } else {
        apply_direct(v, out);
    }
}

void JumpOperator::apply_direct(std::span<const double> v, std::span<double> out) const {
    const int m = size_;
    if (static_cast<int>(v.size()) != m || static_cast<int>(out.size()) != m) {
        throw std::invalid_argument("apply_jump: size mismatch");
    }
    if (is_identity()) {
        std::copy(v.begin(), v.end(), out.begin());
        return;
    }
    const int L = quad_.half_window;
    const double* w = quad_.weights.data() + L;  // w[l], l in [-L, L]
    const double first = v.front();
    const double last = v.back();
    for (int i = 0; i < m; ++i) {
        const int lo = std::max(-L, -i);
        const int hi = std::min(L, m - 1 - i);
        double s = 0.0;
        for (int l = lo; l < 0; ++l) s += w[l] * v[i + l];
        for (int l = 1; l <= hi; ++l) s += w[l] * v[i + l];
        s += left_tail(i) * first + right_tail(i) * last;
        out[i] = diag_term_ * v[i] + h_ * s;
    }
}

void JumpOperator::apply_fft(std::span<const double> v, std::span<double> out,
                             Workspace& ws) const {
    if (!fft_) throw std::logic_error("apply_fft: fast path not enabled");
    const int m = size_;
    if (static_cast<int>(v.size()) != m || static_cast<int>(out.size()) != m) {
        throw std::invalid_argument("apply_jump: size mismatch");
    }
    if (ws.length != fft_->length) throw std::invalid_argument("apply_fft: workspace mismatch");

    const int L = quad_.half_window;
    const int n = fft_->length;
    std::copy(v.begin(), v.end(), ws.real);
    std::fill(ws.real + m, ws.real + n, 0.0);
    auto* spec = static_cast<fftw_complex*>(ws.spectrum);
    fftw_execute_dft_r2c(fft_->forward, ws.real, spec);
    for (int b = 0; b < n / 2 + 1; ++b) {
        const std::complex<double> z =
            std::complex<double>(spec[b][0], spec[b][1]) * fft_->kernel[static_cast<std::size_t>(b)];
        spec[b][0] = z.real();
        spec[b][1] = z.imag();
    }
    fftw_execute_dft_c2r(fft_->backward, spec, ws.real);

    const double w0 = quad_.center_weight();
    const double first = v.front();
    const double last = v.back();
    for (int i = 0; i < m; ++i) {
        const double s = ws.real[i + L] - w0 * v[i] + left_tail(i) * first + right_tail(i) * last;
        out[i] = diag_term_ * v[i] + h_ * s;
    }
}

std::vector<double> apply_jump(const JumpOperator& op, std::span<const double> v) {
    std::vector<double> out(v.size());
    auto ws = op.make_workspace();
    op.apply(v, out, *ws);
    return out;
}

// ---------------------------------------------------------------------------
// Norm diagnostics

namespace {

// Finite section of the infinite-grid stencil: no boundary folding.
TridiagonalOperator finite_section(const TridiagonalOperator& a, bool transpose) {
    TridiagonalOperator s = a;
    const int m = a.size();
    const double lo = transpose ? a.upper : a.lower;
    const double up = transpose ? a.lower : a.upper;
    s.sub.assign(m, lo);
    s.diag.assign(m, a.center);
    s.super.assign(m, up);
    s.sub.front() = 0.0;
    s.super.back() = 0.0;
    return s;
}

double norm2(const std::vector<double>& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Largest singular value by power iteration on M^T M.
template <class Apply, class ApplyT>
double power_norm(int m, Apply apply, ApplyT apply_t) {
    std::vector<double> x(m);
    for (int i = 0; i < m; ++i) x[i] = 1.0 + 0.25 * std::sin(0.7 * i);
    double nx = norm2(x);
    for (auto& e : x) e /= nx;
    double estimate = 0.0;
    for (int it = 0; it < 200; ++it) {
        std::vector<double> y = apply_t(apply(x));
        const double ny = norm2(y);
        if (ny == 0.0) return 0.0;
        const double next = std::sqrt(ny);
        for (int i = 0; i < m; ++i) x[i] = y[i] / ny;
        if (std::abs(next - estimate) <= 1e-10 * next) {
            estimate = next;
            break;
        }
        estimate = next;
    }
    return estimate;
}

std::vector<double> jump_section(const JumpOperator& b, const std::vector<double>& v,
                                 bool transpose) {
    const int m = b.size();
    if (b.is_identity()) return v;
    const auto& q = b.quadrature();
    const int L = q.half_window;
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int l = std::max(-L, -i); l <= std::min(L, m - 1 - i); ++l) {
            if (l == 0) continue;
            s += q.weight(transpose ? -l : l) * v[i + l];
        }
        out[i] = b.diag_term() * v[i] + b.h() * s;
    }
    return out;
}

}  // namespace

NormReport implicit_norm_diagnostics(const TridiagonalOperator& a) {
    NormReport r;
    r.scheme = a.scheme;
    const int m = a.size();

    const auto sec = finite_section(a, false);
    const auto sec_t = finite_section(a, true);
    r.inv_a_norm2 = power_norm(
        m, [&](const std::vector<double>& x) { return solve_implicit(sec, x); },
        [&](const std::vector<double>& x) { return solve_implicit(sec_t, x); });

    double min_margin = std::numeric_limits<double>::infinity();
    bool m_matrix = true;
    for (int i = 0; i < m; ++i) {
        const double off = std::abs(a.sub[i]) + std::abs(a.super[i]);
        min_margin = std::min(min_margin, std::abs(a.diag[i]) - off);
        m_matrix = m_matrix && a.diag[i] > 0.0 && a.sub[i] <= 0.0 && a.super[i] <= 0.0;
    }
    r.m_matrix = m_matrix;
    r.inv_a_norm_inf = min_margin > 0.0 ? 1.0 / min_margin : std::numeric_limits<double>::infinity();
    return r;
}

void add_jump_norms(NormReport& r, const JumpOperator& b) {
    if (b.is_identity()) {
        r.b_norm2 = 1.0;
        r.b_norm_inf = 1.0;
        r.b_bound = 1.0;
        return;
    }
    r.b_norm2 = power_norm(
        b.size(), [&](const std::vector<double>& x) { return jump_section(b, x, false); },
        [&](const std::vector<double>& x) { return jump_section(b, x, true); });
    const auto& q = b.quadrature();
    r.b_norm_inf = std::abs(b.diag_term()) + b.h() * (q.total_mass - q.center_weight());
    r.b_bound = 1.0 + 2.0 * q.law.intensity() * q.c_nu * b.h();
}

NormReport operator_norm_diagnostics(const TridiagonalOperator& a, const JumpOperator& b) {
    NormReport r = implicit_norm_diagnostics(a);
    add_jump_norms(r, b);
    return r;
}

}  // namespace hybridjd
