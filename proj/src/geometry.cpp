#include "w4/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace w4 {

namespace {

void apply_proj(Proj which, const double* Pn, int m, int slots, const double* in, double* out)
{
    if (which == Proj::none) {
        if (in != out) std::copy(in, in + slots * m, out);
        return;
    }
    // all slots at once: columns of X are the R^m values of each slot
    const Eigen::Map<const Eigen::MatrixXd> P(Pn, m, m);
    const Eigen::Map<const Eigen::MatrixXd> X(in, m, slots);
    Eigen::Map<Eigen::MatrixXd> O(out, m, slots);
    if (m > 16 || slots > 256) {
        const Eigen::MatrixXd Y = P * X;
        if (which == Proj::normal) O = Y;
        else O = X - Y;
        return;
    }
    // bounded storage keeps the product off the heap
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 16, 256> Y(m, slots);
    Y.noalias() = P * X;
    if (which == Proj::normal) O = Y;
    else O = X - Y;
}

// out_J -= sum_s sum_q G[q][i][J_s] f_{J[s->q]}
void christoffel_sub(const double* G, int i, int rank, int m, const double* f, double* out)
{
    // nonzero Gamma^q_{i j} per j, gathered once; diagonal metrics leave most of them zero
    int nq[4] = {0, 0, 0, 0};
    int qs[4][4];
    double gs[4][4];
    int total = 0;
    for (int j = 0; j < 4; ++j)
        for (int q = 0; q < 4; ++q) {
            const double gam = G[q * 16 + i * 4 + j];
            if (gam == 0.0) continue;
            qs[j][nq[j]] = q;
            gs[j][nq[j]++] = gam;
            ++total;
        }
    if (total == 0) return;
    int S = 1;
    for (int k = 0; k < rank; ++k) S *= 4;
    for (int J = 0; J < S; ++J) {
        int stride = S / 4;
        double* dst = out + J * m;
        for (int s = 0; s < rank; ++s, stride /= 4) {
            const int js = (J / stride) % 4;
            for (int t = 0; t < nq[js]; ++t) {
                const double gam = gs[js][t];
                const double* src = f + (J + (qs[js][t] - js) * stride) * m;
                for (int a = 0; a < m; ++a) dst[a] -= gam * src[a];
            }
        }
    }
}

int next_pad(const FieldD& f)
{
    const Grid4& g = *f.grid;
    if (g.edge != EdgeMode::shrink) return f.pad;
    for (int a = 0; a < 4; ++a)
        if (!g.periodic[a]) return f.pad + g.radius();
    return f.pad;
}

void check_normal(const Geometry& geo, const FieldD& f, const char* what)
{
    if (!strict_normality() || f.m != geo.m) return;
    const double n = max_norm(f, false);
    const double t = max_tangential(geo, f);
    // absolute floor: fields that vanish analytically carry rounding noise in every direction
    if (t > 1e-6 * n + 1e-12) {
        char buf[160];
        std::snprintf(buf, sizeof buf, ": field is not normal-valued (tangential part %.3e, norm %.3e)", t, n);
        throw std::runtime_error(std::string(what) + buf);
    }
}

// G'[q][0][b] = sum_i g^{ia} Gamma^q_{ib}
void contracted_gamma(const double* gi, const double* G, int a, double* Gp)
{
    std::fill(Gp, Gp + 64, 0.0);
    for (int i = 0; i < 4; ++i) {
        const double w = gi[i * 4 + a];
        if (w == 0.0) continue;
        for (int q = 0; q < 4; ++q)
            for (int b = 0; b < 4; ++b) Gp[q * 16 + b] += w * G[q * 16 + i * 4 + b];
    }
}

}  // namespace

bool& strict_normality()
{
    static bool on = true;
    return on;
}

Geometry build_geometry(Jet jet, double degeneracy)
{
    Geometry geo;
    geo.grid = jet.phi.grid;
    geo.m = jet.phi.m;
    const int m = geo.m;
    const long P = geo.grid->size();
    geo.g = FieldD(geo.grid, 2, 1);
    geo.ginv = FieldD(geo.grid, 2, 1);
    geo.sqrtg = FieldD(geo.grid, 0, 1);
    geo.Gamma = FieldD(geo.grid, 3, 1);
    geo.h = FieldD(geo.grid, 2, m);
    geo.H = FieldD(geo.grid, 0, m);
    geo.Pn = FieldD(geo.grid, 0, m * m);
    std::vector<double> dets(P);
    long bad = -1;
#pragma omp parallel for schedule(static)
    for (long p = 0; p < P; ++p) {
        Eigen::Map<const Eigen::MatrixXd> E(jet.dphi.col(p), m, 4);
        const double* dd = jet.ddphi.col(p);
        const Eigen::Matrix4d g = E.transpose() * E;
        const double det = g.determinant();
        dets[p] = det;
        if (!(det > degeneracy)) {
#pragma omp critical
            bad = (bad < 0 || p < bad) ? p : bad;
            continue;
        }
        const Eigen::Matrix4d gi = g.inverse();
        Eigen::Map<Eigen::Matrix4d>(geo.g.col(p)) = g;
        Eigen::Map<Eigen::Matrix4d>(geo.ginv.col(p)) = gi;
        geo.sqrtg.v(0, p) = std::sqrt(det);
        // dg[i][j][l] = d_i g_jl
        double dg[4][4][4];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int l = 0; l < 4; ++l) {
                    double acc = 0.0;
                    for (int c = 0; c < m; ++c)
                        acc += dd[(i * 4 + j) * m + c] * E(c, l) + E(c, j) * dd[(i * 4 + l) * m + c];
                    dg[i][j][l] = acc;
                }
        double* G = geo.Gamma.col(p);
        for (int k = 0; k < 4; ++k)
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    double acc = 0.0;
                    for (int l = 0; l < 4; ++l) acc += gi(k, l) * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                    G[k * 16 + i * 4 + j] = 0.5 * acc;
                }
        double* hp = geo.h.col(p);
        double* Hp = geo.H.col(p);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int c = 0; c < m; ++c) {
                    double acc = dd[(i * 4 + j) * m + c];
                    for (int k = 0; k < 4; ++k) acc -= G[k * 16 + i * 4 + j] * E(c, k);
                    hp[(i * 4 + j) * m + c] = acc;
                }
        for (int c = 0; c < m; ++c) {
            double acc = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) acc += gi(i, j) * hp[(i * 4 + j) * m + c];
            Hp[c] = 0.25 * acc;
        }
        Eigen::Map<Eigen::MatrixXd> Pn(geo.Pn.col(p), m, m);
        Pn = Eigen::MatrixXd::Identity(m, m) - E * gi * E.transpose();
    }
    if (bad >= 0) {
        const auto ix = geo.grid->index(bad);
        throw std::runtime_error("degenerate immersion: det g = " + std::to_string(dets[bad]) + " at grid point (" +
                                 std::to_string(ix[0]) + "," + std::to_string(ix[1]) + "," + std::to_string(ix[2]) +
                                 "," + std::to_string(ix[3]) + ")");
    }
    geo.min_det = *std::min_element(dets.begin(), dets.end());
    geo.phi = std::move(jet.phi);
    geo.dphi = std::move(jet.dphi);
    return geo;
}

FieldD trace_free(const Geometry& geo)
{
    FieldD h0 = geo.h;
    const int m = geo.m;
#pragma omp parallel for schedule(static)
    for (long p = 0; p < h0.points(); ++p) {
        double* o = h0.col(p);
        const double* g = geo.g.col(p);
        const double* H = geo.H.col(p);
        for (int ij = 0; ij < 16; ++ij)
            for (int c = 0; c < m; ++c) o[ij * m + c] -= g[ij] * H[c];
    }
    return h0;
}

FieldD project(const Geometry& geo, const FieldD& f, Proj which)
{
    if (f.m != geo.m) throw std::invalid_argument("project expects an R^m-valued field");
    FieldD out = FieldD::uninitialized(f.grid, f.rank, f.m);
    out.pad = f.pad;
    const int S = f.slots();
#pragma omp parallel for schedule(static)
    for (long p = 0; p < f.points(); ++p) apply_proj(which, geo.Pn.col(p), f.m, S, f.col(p), out.col(p));
    return out;
}

FieldD covariant_gradient(const Geometry& geo, const FieldD& f, Proj which)
{
    const int C = f.comps();
    FieldD out = FieldD::uninitialized(f.grid, f.rank + 1, f.m);
    for (int i = 0; i < 4; ++i) apply_partial(f, 0, out, i * C, C, i, static_cast<const double*>(nullptr), 0, false);
    out.pad = next_pad(f);
    const int S = out.slots();
#pragma omp parallel for schedule(static)
    for (long p = 0; p < f.points(); ++p) {
        const double* G = geo.Gamma.col(p);
        double* o = out.col(p);
        for (int i = 0; i < 4; ++i) christoffel_sub(G, i, f.rank, f.m, f.col(p), o + i * C);
        if (which != Proj::none) apply_proj(which, geo.Pn.col(p), f.m, S, o, o);
    }
    return out;
}

FieldD raw_gradient(const Geometry& geo, const FieldD& f) { return covariant_gradient(geo, f, Proj::none); }

FieldD normal_gradient(const Geometry& geo, const FieldD& f)
{
    check_normal(geo, f, "normal_gradient");
    return covariant_gradient(geo, f, Proj::normal);
}

FieldD divergence(const Geometry& geo, const FieldD& f, Proj which)
{
    if (f.rank < 1) throw std::invalid_argument("divergence needs rank >= 1");
    const int Cs = f.comps() / 4;
    FieldD out = FieldD::uninitialized(f.grid, f.rank - 1, f.m);
    const long ld = geo.ginv.v.rows();
    // the first sweep writes every entry (zeros where its weight vanishes); the rest accumulate
    for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 4; ++i)
            apply_partial(f, a * Cs, out, 0, Cs, i, geo.ginv.v.data() + (i * 4 + a), ld, a + i > 0);
    out.pad = next_pad(f);
    const int S = out.slots();
    const int m = f.m;
#pragma omp parallel for schedule(static)
    for (long p = 0; p < f.points(); ++p) {
        const double* G = geo.Gamma.col(p);
        const double* gi = geo.ginv.col(p);
        const double* fp = f.col(p);
        double* o = out.col(p);
        for (int q = 0; q < 4; ++q) {
            double gbar = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int a = 0; a < 4; ++a) gbar += gi[i * 4 + a] * G[q * 16 + i * 4 + a];
            if (gbar != 0.0)
                for (int c = 0; c < Cs; ++c) o[c] -= gbar * fp[q * Cs + c];
        }
        if (f.rank > 1) {
            double Gp[64];
            for (int a = 0; a < 4; ++a) {
                contracted_gamma(gi, G, a, Gp);
                christoffel_sub(Gp, 0, f.rank - 1, m, fp + a * Cs, o);
            }
        }
        if (which != Proj::none) apply_proj(which, geo.Pn.col(p), m, S, o, o);
    }
    return out;
}

FieldD div_of_grad(const Geometry& geo, const FieldD& f, Proj inner, Proj outer)
{
    const int C = f.comps();
    const int m = f.m;
    FieldD out = FieldD::uninitialized(f.grid, f.rank, m);
    FieldD Y = FieldD::uninitialized(f.grid, f.rank, m);
    const long ld = geo.ginv.v.rows();
    const int S = f.slots();
    for (int a = 0; a < 4; ++a) {
        apply_partial(f, 0, Y, 0, C, a, static_cast<const double*>(nullptr), 0, false);
        Y.pad = next_pad(f);
#pragma omp parallel for schedule(static)
        for (long p = 0; p < f.points(); ++p) {
            double* y = Y.col(p);
            christoffel_sub(geo.Gamma.col(p), a, f.rank, m, f.col(p), y);
            if (inner != Proj::none) apply_proj(inner, geo.Pn.col(p), m, S, y, y);
        }
        for (int i = 0; i < 4; ++i) apply_partial(Y, 0, out, 0, C, i, geo.ginv.v.data() + (i * 4 + a), ld, a + i > 0);
#pragma omp parallel for schedule(static)
        for (long p = 0; p < f.points(); ++p) {
            const double* G = geo.Gamma.col(p);
            const double* gi = geo.ginv.col(p);
            const double* y = Y.col(p);
            double* o = out.col(p);
            double gbar = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int b = 0; b < 4; ++b) gbar += gi[i * 4 + b] * G[a * 16 + i * 4 + b];
            if (gbar != 0.0)
                for (int c = 0; c < C; ++c) o[c] -= gbar * y[c];
            if (f.rank > 0) {
                double Gp[64];
                contracted_gamma(gi, G, a, Gp);
                christoffel_sub(Gp, 0, f.rank, m, y, o);
            }
        }
    }
    out.pad = next_pad(Y);
    if (outer != Proj::none) {
#pragma omp parallel for schedule(static)
        for (long p = 0; p < f.points(); ++p) apply_proj(outer, geo.Pn.col(p), m, S, out.col(p), out.col(p));
    }
    return out;
}

FieldD normal_laplacian(const Geometry& geo, const FieldD& f)
{
    check_normal(geo, f, "normal_laplacian");
    return div_of_grad(geo, f, Proj::normal, Proj::normal);
}

FieldD normal_bilaplacian(const Geometry& geo, const FieldD& f)
{
    return normal_laplacian(geo, normal_laplacian(geo, f));
}

FieldD raw_laplacian(const Geometry& geo, const FieldD& f) { return div_of_grad(geo, f, Proj::none, Proj::none); }

FieldD gauss_riemann(const Geometry& geo)
{
    const int m = geo.m;
    FieldD R(geo.grid, 4, 1);
#pragma omp parallel for schedule(static)
    for (long p = 0; p < R.points(); ++p) {
        const double* h = geo.h.col(p);
        double dot[16][16];
        for (int a = 0; a < 16; ++a)
            for (int b = a; b < 16; ++b) {
                double acc = 0.0;
                for (int c = 0; c < m; ++c) acc += h[a * m + c] * h[b * m + c];
                dot[a][b] = dot[b][a] = acc;
            }
        double* o = R.col(p);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    for (int l = 0; l < 4; ++l)
                        o[((i * 4 + j) * 4 + k) * 4 + l] = dot[i * 4 + k][j * 4 + l] - dot[i * 4 + l][j * 4 + k];
    }
    return R;
}

FieldD raise_slot(const Geometry& geo, const FieldD& f, int slot)
{
    if (slot < 0 || slot >= f.rank) throw std::invalid_argument("raise_slot: bad slot");
    FieldD out = FieldD::uninitialized(f.grid, f.rank, f.m);
    out.pad = f.pad;
    const int S = f.slots();
    int stride = 1;
    for (int k = slot + 1; k < f.rank; ++k) stride *= 4;
    const int m = f.m;
#pragma omp parallel for schedule(static)
    for (long p = 0; p < f.points(); ++p) {
        const double* gi = geo.ginv.col(p);
        const double* fp = f.col(p);
        double* o = out.col(p);
        for (int J = 0; J < S; ++J) {
            const int js = (J / stride) % 4;
            for (int c = 0; c < m; ++c) {
                double acc = 0.0;
                for (int b = 0; b < 4; ++b) acc += gi[js * 4 + b] * fp[(J + (b - js) * stride) * m + c];
                o[J * m + c] = acc;
            }
        }
    }
    return out;
}

double max_tangential(const Geometry& geo, const FieldD& f)
{
    const int m = f.m;
    const int S = f.slots();
    double mx = 0.0;
    std::vector<double> t(m);
    for (long p = 0; p < f.points(); ++p) {
        for (int s = 0; s < S; ++s) {
            apply_proj(Proj::tangent, geo.Pn.col(p), m, 1, f.col(p) + s * m, t.data());
            double n2 = 0.0;
            for (double x : t) n2 += x * x;
            mx = std::max(mx, std::sqrt(n2));
        }
    }
    return mx;
}

double max_norm(const FieldD& f, bool interior_only)
{
    const Grid4& g = *f.grid;
    const int m = f.m;
    const int S = f.slots();
    double mx = 0.0;
    for (long p = 0; p < f.points(); ++p) {
        if (interior_only && !g.interior(p)) continue;
        const double* fp = f.col(p);
        for (int s = 0; s < S; ++s) {
            double n2 = 0.0;
            for (int c = 0; c < m; ++c) n2 += fp[s * m + c] * fp[s * m + c];
            mx = std::max(mx, std::sqrt(n2));
        }
    }
    return mx;
}

}  // namespace w4
