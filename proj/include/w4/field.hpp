#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace w4 {

enum class EdgeMode { shrink, closure };

// Finite-difference weights for the first derivative, Fornberg's recursion.
// Returns weights for nodes x[0..n) evaluated at x0.
inline std::vector<double> fornberg_first(double x0, const std::vector<double>& x)
{
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, 1);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][1];
    return w;
}

struct Stencil {
    int order = 8;
    int r = 4;
    std::vector<double> central;            // offsets -r..r, unit spacing
    std::vector<std::vector<double>> left;  // left[i]: nodes 0..2r evaluated at node i, i < r

    static Stencil make(int order)
    {
        if (order < 2 || order > 12 || order % 2 != 0)
            throw std::invalid_argument("stencil order must be one of 2,4,6,8,10,12");
        Stencil s;
        s.order = order;
        s.r = order / 2;
        std::vector<double> nodes;
        for (int k = -s.r; k <= s.r; ++k) nodes.push_back(k);
        s.central = fornberg_first(0.0, nodes);
        // exact antisymmetry keeps the discrete divergence theorem at rounding level
        for (int k = 1; k <= s.r; ++k) {
            const double a = 0.5 * (s.central[s.r + k] - s.central[s.r - k]);
            s.central[s.r + k] = a;
            s.central[s.r - k] = -a;
        }
        s.central[s.r] = 0.0;
        std::vector<double> one_sided;
        for (int k = 0; k <= 2 * s.r; ++k) one_sided.push_back(k);
        for (int i = 0; i < s.r; ++i) s.left.push_back(fornberg_first(i, one_sided));
        return s;
    }
};

struct Grid4 {
    std::array<int, 4> dims{};
    std::array<double, 4> spacing{};
    std::array<double, 4> origin{};
    std::array<bool, 4> periodic{};
    int margin = 0;
    int order = 8;
    EdgeMode edge = EdgeMode::closure;

    long size() const { return long(dims[0]) * dims[1] * dims[2] * dims[3]; }
    int radius() const { return order / 2; }

    long stride(int axis) const
    {
        long s = 1;
        for (int a = 3; a > axis; --a) s *= dims[a];
        return s;
    }

    std::array<int, 4> index(long p) const
    {
        std::array<int, 4> ix{};
        for (int a = 3; a >= 0; --a) {
            ix[a] = static_cast<int>(p % dims[a]);
            p /= dims[a];
        }
        return ix;
    }

    long point(const std::array<int, 4>& ix) const
    {
        return ((long(ix[0]) * dims[1] + ix[1]) * dims[2] + ix[2]) * dims[3] + ix[3];
    }

    double coord(int axis, int i) const { return origin[axis] + i * spacing[axis]; }

    bool interior_axis(int axis, int i) const
    {
        return periodic[axis] || (i >= margin && i < dims[axis] - margin);
    }

    bool interior(long p) const
    {
        const auto ix = index(p);
        for (int a = 0; a < 4; ++a)
            if (!interior_axis(a, ix[a])) return false;
        return true;
    }

    // quadrature weight along one axis: rectangle on periodic, trapezoid on the interior otherwise
    double weight(int axis, int i) const
    {
        if (periodic[axis]) return spacing[axis];
        if (!interior_axis(axis, i)) return 0.0;
        if (i == margin || i == dims[axis] - 1 - margin) return 0.5 * spacing[axis];
        return spacing[axis];
    }

    bool operator==(const Grid4& o) const
    {
        return dims == o.dims && spacing == o.spacing && origin == o.origin &&
               periodic == o.periodic && margin == o.margin && order == o.order && edge == o.edge;
    }
    bool operator!=(const Grid4& o) const { return !(*this == o); }
};

using GridPtr = std::shared_ptr<const Grid4>;

inline GridPtr build_grid(const std::array<int, 4>& dims, const std::array<double, 4>& extents,
                          const std::array<bool, 4>& periodic, int margin, int order = 8,
                          EdgeMode edge = EdgeMode::closure,
                          const std::array<double, 4>& origin = {0, 0, 0, 0})
{
    const int r = order / 2;
    if (order < 2 || order > 12 || order % 2 != 0)
        throw std::invalid_argument("stencil order must be one of 2,4,6,8,10,12");
    auto g = std::make_shared<Grid4>();
    g->dims = dims;
    g->periodic = periodic;
    g->origin = origin;
    g->margin = margin;
    g->order = order;
    g->edge = edge;
    bool any_bounded = false;
    for (int a = 0; a < 4; ++a) {
        if (!(extents[a] > 0.0)) throw std::invalid_argument("zero extent on axis " + std::to_string(a));
        if (dims[a] < std::max(8, 2 * r + 1)) throw std::invalid_argument("grid too small");
        g->spacing[a] = periodic[a] ? extents[a] / dims[a] : extents[a] / (dims[a] - 1);
        if (!periodic[a]) {
            any_bounded = true;
            if (dims[a] <= 2 * margin) throw std::invalid_argument("grid too small");
        }
    }
    if (margin < 0) throw std::invalid_argument("negative margin");
    if (any_bounded && margin < r) throw std::invalid_argument("interior margin smaller than stencil half-width");
    return g;
}

// Rank-k covariant tensor with R^m-valued components. Column p holds point p,
// component (i1..ik, alpha) sits at row ((i1*4+i2)*4+...)*m + alpha.
template <typename Scalar>
struct Field {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    GridPtr grid;
    int rank = 0;
    int m = 1;
    int pad = 0;  // invalid layers next to non-periodic edges (shrink mode only)
    Matrix v;

    Field() = default;
    Field(GridPtr g, int rank_, int m_) : grid(std::move(g)), rank(rank_), m(m_)
    {
        v = Matrix::Zero(comps(), grid->size());
    }

    // Storage left unset; only for outputs the caller overwrites entirely.
    static Field uninitialized(GridPtr g, int rank_, int m_)
    {
        Field f;
        f.grid = std::move(g);
        f.rank = rank_;
        f.m = m_;
        f.v.resize(f.comps(), f.grid->size());
        return f;
    }

    int slots() const { return ipow4(rank); }
    int comps() const { return slots() * m; }
    long points() const { return grid->size(); }
    Scalar* col(long p) { return v.data() + p * v.rows(); }
    const Scalar* col(long p) const { return v.data() + p * v.rows(); }

    static int ipow4(int k)
    {
        int s = 1;
        for (int i = 0; i < k; ++i) s *= 4;
        return s;
    }
};

template <typename Scalar>
inline void require_same_grid(const Field<Scalar>& a, const Field<Scalar>& b)
{
    if (a.grid != b.grid && *a.grid != *b.grid) throw std::invalid_argument("mismatched grids");
}

// Neighbour table for one axis: for each index along the axis, node indices and weights (unit spacing).
struct AxisStencil {
    int width = 0;
    std::vector<int> node;     // n * width
    std::vector<double> w;     // n * width
    std::vector<char> valid;   // n

    static AxisStencil make(const Grid4& g, int axis, int pad_in, int pad_out)
    {
        const Stencil s = Stencil::make(g.order);
        const int n = g.dims[axis];
        const int r = s.r;
        AxisStencil t;
        t.width = 2 * r + 1;
        t.node.assign(n * t.width, 0);
        t.w.assign(n * t.width, 0.0);
        t.valid.assign(n, 1);
        for (int i = 0; i < n; ++i) {
            int* nd = &t.node[i * t.width];
            double* wt = &t.w[i * t.width];
            if (g.periodic[axis]) {
                for (int k = -r; k <= r; ++k) {
                    nd[k + r] = ((i + k) % n + n) % n;
                    wt[k + r] = s.central[k + r];
                }
            } else if (g.edge == EdgeMode::shrink) {
                if (i < pad_out || i >= n - pad_out) {
                    t.valid[i] = 0;
                    continue;
                }
                (void)pad_in;
                for (int k = -r; k <= r; ++k) {
                    nd[k + r] = i + k;
                    wt[k + r] = s.central[k + r];
                }
            } else if (i < r) {
                for (int k = 0; k <= 2 * r; ++k) {
                    nd[k] = k;
                    wt[k] = s.left[i][k];
                }
            } else if (i >= n - r) {
                const int j = n - 1 - i;
                for (int k = 0; k <= 2 * r; ++k) {
                    nd[k] = n - 1 - k;
                    wt[k] = -s.left[j][k];
                }
            } else {
                for (int k = -r; k <= r; ++k) {
                    nd[k + r] = i + k;
                    wt[k + r] = s.central[k + r];
                }
            }
        }
        return t;
    }
};

// dst.rows[dst_row0, +count) (+)= weight(p) * d/du_axis of src.rows[src_row0, +count)
template <typename Scalar>
void apply_partial(const Field<Scalar>& src, int src_row0, Field<Scalar>& dst, int dst_row0, int count,
                   int axis, const Scalar* weight, long weight_stride, bool accumulate)
{
    const Grid4& g = *src.grid;
    int pad_out = src.pad;
    if (!g.periodic[axis] && g.edge == EdgeMode::shrink) {
        pad_out = src.pad + g.radius();
        if (pad_out > g.margin)
            throw std::out_of_range("derivative requested outside the interior set on axis " +
                                    std::to_string(axis));
    }
    const AxisStencil t = AxisStencil::make(g, axis, src.pad, pad_out);
    const long P = g.size();
    const long st = g.stride(axis);
    const int n = g.dims[axis];
    const Scalar inv_h = Scalar(1.0 / g.spacing[axis]);
    const long ld_src = src.v.rows();
    const long ld_dst = dst.v.rows();
    const Scalar* S = src.v.data();
    Scalar* D = dst.v.data();
#pragma omp parallel for schedule(static)
    for (long p = 0; p < P; ++p) {
        const int i = static_cast<int>((p / st) % n);
        Scalar* out = D + p * ld_dst + dst_row0;
        if (!t.valid[i]) {
            if (!accumulate)
                for (int c = 0; c < count; ++c) out[c] = Scalar(0);
            continue;
        }
        const long base = p - long(i) * st;
        Scalar scale = inv_h;
        if (weight) scale *= weight[p * weight_stride];
        if (!accumulate)
            for (int c = 0; c < count; ++c) out[c] = Scalar(0);
        if (scale == Scalar(0)) continue;
        for (int k = 0; k < t.width; ++k) {
            const Scalar wk = Scalar(t.w[i * t.width + k]) * scale;
            if (wk == Scalar(0)) continue;
            const Scalar* in = S + (base + long(t.node[i * t.width + k]) * st) * ld_src + src_row0;
            for (int c = 0; c < count; ++c) out[c] += wk * in[c];
        }
    }
}

template <typename Scalar>
int partial_pad(const Field<Scalar>& f, int axis)
{
    const Grid4& g = *f.grid;
    if (!g.periodic[axis] && g.edge == EdgeMode::shrink) return f.pad + g.radius();
    return f.pad;
}

template <typename Scalar>
Field<Scalar> partial(const Field<Scalar>& f, int axis)
{
    if (axis < 0 || axis > 3) throw std::invalid_argument("axis out of range");
    Field<Scalar> out = Field<Scalar>::uninitialized(f.grid, f.rank, f.m);
    apply_partial(f, 0, out, 0, f.comps(), axis, static_cast<const Scalar*>(nullptr), 0, false);
    out.pad = partial_pad(f, axis);
    return out;
}

// Fixed-order pairwise reduction.
template <typename Scalar>
Scalar pairwise_sum(const Scalar* x, long n)
{
    if (n <= 8) {
        Scalar s = 0;
        for (long i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const long h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

template <typename Scalar>
Scalar pairwise_sum(const std::vector<Scalar>& x)
{
    return pairwise_sum(x.data(), static_cast<long>(x.size()));
}

// Product quadrature weight at point p (zero outside the interior set).
inline double cell_weight(const Grid4& g, long p)
{
    const auto ix = g.index(p);
    double w = 1.0;
    for (int a = 0; a < 4; ++a) w *= g.weight(a, ix[a]);
    return w;
}

template <typename Scalar>
Scalar integrate(const Field<Scalar>& f, const Field<Scalar>& weight)
{
    require_same_grid(f, weight);
    if (f.comps() != 1 || weight.comps() != 1) throw std::invalid_argument("integrate expects scalar fields");
    const Grid4& g = *f.grid;
    std::vector<Scalar> terms(g.size());
#pragma omp parallel for schedule(static)
    for (long p = 0; p < g.size(); ++p) terms[p] = f.v(0, p) * weight.v(0, p) * Scalar(cell_weight(g, p));
    return pairwise_sum(terms);
}

template <typename Scalar>
Field<Scalar> constant_field(GridPtr g, Scalar value)
{
    Field<Scalar> f(std::move(g), 0, 1);
    f.v.setConstant(value);
    return f;
}

template <typename Scalar, typename Fn>
Field<Scalar> sample_scalar(GridPtr g, Fn&& fn)
{
    Field<Scalar> f(g, 0, 1);
    for (long p = 0; p < g->size(); ++p) {
        const auto ix = g->index(p);
        std::array<double, 4> u{};
        for (int a = 0; a < 4; ++a) u[a] = g->coord(a, ix[a]);
        f.v(0, p) = fn(u);
    }
    return f;
}

enum class Profile { quintic, smooth };

inline double smoothstep(Profile prof, double t, double* dt)
{
    if (t <= 0.0) {
        *dt = 0.0;
        return 0.0;
    }
    if (t >= 1.0) {
        *dt = 0.0;
        return 1.0;
    }
    if (prof == Profile::quintic) {
        *dt = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    }
    // exp(-1/t) / (exp(-1/t) + exp(-1/(1-t)))
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    const double da = a / (t * t);
    const double db = -b / ((1.0 - t) * (1.0 - t));
    const double s = a + b;
    *dt = (da * s - a * (da + db)) / (s * s);
    return a / s;
}

struct CutoffFields {
    Field<double> gamma;     // gamma
    Field<double> gamma_p;   // gamma^p
    Field<double> dgamma;    // d_a gamma, rank 1
    Field<double> gamma_pm1_dgamma;  // gamma^(p-1) d_a gamma, rank 1
    double p = 4;
};

// gamma(u) = S(t), t = (1 - (r/rho)^2) / (3/4) clamped, so gamma = 1 for r <= rho/2 and 0 for r >= rho.
inline CutoffFields cutoff_field(GridPtr g, const std::array<double, 4>& center, double rho, double p,
                                 Profile prof = Profile::quintic)
{
    if (!(rho > 0.0)) throw std::invalid_argument("cutoff radius must be positive");
    CutoffFields c;
    c.p = p;
    c.gamma = Field<double>(g, 0, 1);
    c.gamma_p = Field<double>(g, 0, 1);
    c.dgamma = Field<double>(g, 1, 1);
    c.gamma_pm1_dgamma = Field<double>(g, 1, 1);
    bool whole = true;
    for (long q = 0; q < g->size(); ++q) {
        const auto ix = g->index(q);
        std::array<double, 4> d{};
        double r2 = 0.0;
        for (int a = 0; a < 4; ++a) {
            d[a] = g->coord(a, ix[a]) - center[a];
            if (g->periodic[a]) {
                const double L = g->spacing[a] * g->dims[a];
                d[a] -= L * std::round(d[a] / L);
            }
            r2 += d[a] * d[a];
        }
        const double t = (1.0 - r2 / (rho * rho)) / 0.75;
        double ds = 0.0;
        const double s = smoothstep(prof, t, &ds);
        if (s < 1.0) whole = false;
        if (s > 0.0 && !g->interior(q))
            throw std::invalid_argument("cutoff support touches a non-periodic boundary");
        c.gamma.v(0, q) = s;
        c.gamma_p.v(0, q) = std::pow(s, p);
        const double gpm1 = s > 0.0 ? std::pow(s, p - 1.0) : 0.0;
        for (int a = 0; a < 4; ++a) {
            const double dg = ds * (-2.0 * d[a] / (rho * rho)) / 0.75;
            c.dgamma.v(a, q) = dg;
            c.gamma_pm1_dgamma.v(a, q) = gpm1 * dg;
        }
    }
    if (!whole) {
        for (int a = 0; a < 4; ++a) {
            if (!g->periodic[a]) continue;
            const double L = g->spacing[a] * g->dims[a];
            if (rho > 0.5 * L) throw std::invalid_argument("cutoff support wraps around a periodic axis");
        }
    }
    return c;
}

}  // namespace w4
