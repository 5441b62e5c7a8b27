#include "w4/willmore.hpp"

#include "pointwise.hpp"

#include <cmath>

namespace w4 {

using pw::dot;
using pw::pointwise;

CurvatureCache curvature_cache(const Geometry& geo, bool with_laplacian)
{
    const int m = geo.m;
    CurvatureCache cc;
    cc.dH = raw_gradient(geo, geo.H);
    cc.nH = project(geo, cc.dH, Proj::normal);
    cc.A = pointwise(geo.grid, 2, 1, [&](long p, double* o) {
        for (int ij = 0; ij < 16; ++ij) o[ij] = dot(geo.H.col(p), geo.h.col(p) + ij * m, m);
    });
    cc.v = pointwise(geo.grid, 0, m, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* A = cc.A.col(p);
        double Au[16];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double s = 0.0;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) s += gi[i * 4 + a] * gi[j * 4 + b] * A[a * 4 + b];
                Au[i * 4 + j] = s;
            }
        for (int ij = 0; ij < 16; ++ij) pw::axpy(Au[ij], geo.h.col(p) + ij * m, o, m);
    });
    if (with_laplacian) cc.LH = normal_laplacian(geo, geo.H);
    return cc;
}

FieldD z_field(const Geometry& geo, const CurvatureCache& cc)
{
    const int m = geo.m;
    return pointwise(geo.grid, 2, m, [&](long p, double* o) {
        for (int ij = 0; ij < 16; ++ij)
            for (int c = 0; c < m; ++c) o[ij * m + c] = cc.A.v(ij, p) * geo.H.v(c, p);
    });
}

FieldD energy_density(const Geometry& geo)
{
    const int m = geo.m;
    const FieldD nH = normal_gradient(geo, geo.H);
    FieldD e = pointwise(geo.grid, 0, 1, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* n = nH.col(p);
        const double* H = geo.H.col(p);
        const double* h = geo.h.col(p);
        double grad2 = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) grad2 += gi[i * 4 + j] * dot(n + i * m, n + j * m, m);
        double A[16];
        for (int ij = 0; ij < 16; ++ij) A[ij] = dot(H, h + ij * m, m);
        double hh = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    for (int l = 0; l < 4; ++l) hh += gi[i * 4 + k] * gi[j * 4 + l] * A[i * 4 + j] * A[k * 4 + l];
        const double H2 = dot(H, H, m);
        o[0] = grad2 - hh + 7.0 * H2 * H2;
    });
    e.pad = nH.pad;
    return e;
}

double total_energy(const Geometry& geo, const FieldD* weight)
{
    FieldD e = energy_density(geo);
    if (weight) e.v.array() *= weight->v.array();
    return integrate(e, geo.sqrtg);
}

WillmoreFields willmore_terms(const Geometry& geo)
{
    const int m = geo.m;
    const GridPtr G = geo.grid;
    const CurvatureCache cc = curvature_cache(geo);
    WillmoreFields wf;
    auto add = [&](const std::string& name, int block, FieldD f) {
        const double sign = block == 1 ? 1.0 : (block == 2 ? -1.0 : 7.0);
        wf.terms.push_back({name, block, sign, std::move(f)});
    };

    // ---- W1
    {
        FieldD t = normal_laplacian(geo, cc.LH);
        t.v *= -0.5;
        add("W1: -1/2 Lap_n^2 H", 1, std::move(t));
    }
    add("W1: -1/2 (Lap_n H.h_ik) h^ik", 1, pointwise(G, 0, m, [&](long p, double* o) {
            double hu[16 * 16];
            pw::raise2(geo.ginv.col(p), geo.h.col(p), m, hu);
            const double* L = cc.LH.col(p);
            for (int ik = 0; ik < 16; ++ik) pw::axpy(-0.5 * dot(L, geo.h.col(p) + ik * m, m), hu + ik * m, o, m);
        }));
    {
        // Y_k = (grad^j H . h_jk) H
        const FieldD Y = pointwise(G, 1, m, [&](long p, double* o) {
            const double* gi = geo.ginv.col(p);
            const double* dH = cc.dH.col(p);
            const double* h = geo.h.col(p);
            for (int k = 0; k < 4; ++k) {
                double s = 0.0;
                for (int j = 0; j < 4; ++j)
                    for (int a = 0; a < 4; ++a) s += gi[j * 4 + a] * dot(dH + a * m, h + (j * 4 + k) * m, m);
                for (int c = 0; c < m; ++c) o[k * m + c] = s * geo.H.v(c, p);
            }
        });
        FieldD t = divergence(geo, Y, Proj::normal);
        t.v *= 2.0;
        add("W1: +2 pi_n grad_k((grad^j H.h_j^k) H)", 1, std::move(t));
    }
    {
        // Y_k = (H.h_k^j) pi_n grad_j H
        const FieldD Y = pointwise(G, 1, m, [&](long p, double* o) {
            const double* gi = geo.ginv.col(p);
            const double* A = cc.A.col(p);
            const double* n = cc.nH.col(p);
            for (int k = 0; k < 4; ++k)
                for (int j = 0; j < 4; ++j) {
                    double s = 0.0;
                    for (int a = 0; a < 4; ++a) s += A[k * 4 + a] * gi[a * 4 + j];
                    for (int c = 0; c < m; ++c) o[k * m + c] += s * n[j * m + c];
                }
        });
        FieldD t = divergence(geo, Y, Proj::normal);
        t.v *= -2.0;
        add("W1: -2 pi_n grad_k((H.h^k_j) pi_n grad^j H)", 1, std::move(t));
    }
    add("W1: +2 (pi_n grad_i H.pi_n grad_j H) h^ij", 1, pointwise(G, 0, m, [&](long p, double* o) {
            double hu[16 * 16];
            pw::raise2(geo.ginv.col(p), geo.h.col(p), m, hu);
            const double* n = cc.nH.col(p);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) pw::axpy(2.0 * dot(n + i * m, n + j * m, m), hu + (i * 4 + j) * m, o, m);
        }));
    add("W1: -4 |pi_n grad H|^2 H", 1, pointwise(G, 0, m, [&](long p, double* o) {
            const double* gi = geo.ginv.col(p);
            const double* n = cc.nH.col(p);
            double s = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) s += gi[i * 4 + j] * dot(n + i * m, n + j * m, m);
            pw::axpy(-4.0 * s, geo.H.col(p), o, m);
        }));

    // ---- W2
    add("W2: +4 (H.h_ij)(H.h^i_k) h^jk", 2, pointwise(G, 0, m, [&](long p, double* o) {
            const double* gi = geo.ginv.col(p);
            const double* A = cc.A.col(p);
            double hu[16 * 16];
            pw::raise2(gi, geo.h.col(p), m, hu);
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) {
                    double s = 0.0;
                    for (int i = 0; i < 4; ++i)
                        for (int a = 0; a < 4; ++a) s += A[i * 4 + j] * gi[i * 4 + a] * A[a * 4 + k];
                    pw::axpy(4.0 * s, hu + (j * 4 + k) * m, o, m);
                }
        }));
    add("W2: -4 |H.h|^2 H", 2, pointwise(G, 0, m, [&](long p, double* o) {
            const double* gi = geo.ginv.col(p);
            const double* A = cc.A.col(p);
            double s = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    for (int k = 0; k < 4; ++k)
                        for (int l = 0; l < 4; ++l) s += gi[i * 4 + k] * gi[j * 4 + l] * A[i * 4 + j] * A[k * 4 + l];
            pw::axpy(-4.0 * s, geo.H.col(p), o, m);
        }));
    add("W2: +1/2 (H.h^ij)(h_kl.h_ij) h^kl", 2, pointwise(G, 0, m, [&](long p, double* o) {
            double hu[16 * 16];
            pw::raise2(geo.ginv.col(p), geo.h.col(p), m, hu);
            const double* v = cc.v.col(p);
            for (int kl = 0; kl < 16; ++kl) pw::axpy(0.5 * dot(v, geo.h.col(p) + kl * m, m), hu + kl * m, o, m);
        }));
    {
        FieldD t = normal_laplacian(geo, cc.v);
        t.v *= 0.5;
        add("W2: +1/2 Lap_n((H.h^ij) h_ij)", 2, std::move(t));
    }
    {
        const FieldD Z = z_field(geo, cc);
        const FieldD DZ = divergence(geo, Z, Proj::none);
        FieldD t = divergence(geo, DZ, Proj::normal);
        t.v *= 2.0;
        add("W2: +2 pi_n grad_i grad_j((H.h^ij) H)", 2, std::move(t));
    }

    // ---- W3
    add("W3: |H|^2 (H.h_ij) h^ij", 3, pointwise(G, 0, m, [&](long p, double* o) {
            const double H2 = dot(geo.H.col(p), geo.H.col(p), m);
            pw::axpy(H2, cc.v.col(p), o, m);
        }));
    add("W3: -4 |H|^4 H", 3, pointwise(G, 0, m, [&](long p, double* o) {
            const double H2 = dot(geo.H.col(p), geo.H.col(p), m);
            pw::axpy(-4.0 * H2 * H2, geo.H.col(p), o, m);
        }));
    {
        const FieldD K = pointwise(G, 0, m, [&](long p, double* o) {
            const double H2 = dot(geo.H.col(p), geo.H.col(p), m);
            pw::axpy(H2, geo.H.col(p), o, m);
        });
        add("W3: +Lap_n(|H|^2 H)", 3, normal_laplacian(geo, K));
    }

    wf.W1 = FieldD(G, 0, m);
    wf.W2 = FieldD(G, 0, m);
    wf.W3 = FieldD(G, 0, m);
    int pad = 0;
    for (const auto& t : wf.terms) {
        FieldD& dst = t.block == 1 ? wf.W1 : (t.block == 2 ? wf.W2 : wf.W3);
        dst.v += t.value.v;
        pad = std::max(pad, t.value.pad);
    }
    wf.W1.pad = wf.W2.pad = wf.W3.pad = pad;
    wf.W = wf.W1;
    wf.W.v -= wf.W2.v;
    wf.W.v += 7.0 * wf.W3.v;
    return wf;
}

FieldD willmore(const Geometry& geo) { return willmore_terms(geo).W; }

ResidualNorms residual_norms(const Geometry& geo, const WillmoreFields& wf, const FieldD* weight)
{
    const Grid4& g = *geo.grid;
    const int m = geo.m;
    ResidualNorms r;
    std::vector<double> sq(g.size(), 0.0);
    for (long p = 0; p < g.size(); ++p) {
        if (!g.interior(p)) continue;
        const double wgt = weight ? weight->v(0, p) : 1.0;
        const double n2 = dot(wf.W.col(p), wf.W.col(p), m) * wgt * wgt;
        r.linf = std::max(r.linf, std::sqrt(n2));
        sq[p] = n2 * geo.sqrtg.v(0, p) * cell_weight(g, p);
    }
    r.l2 = std::sqrt(pairwise_sum(sq));
    for (const auto& t : wf.terms) {
        TermStat s;
        s.name = t.name;
        std::vector<double> ratios;
        for (long p = 0; p < g.size(); ++p) {
            if (!g.interior(p)) continue;
            const double* x = t.value.col(p);
            s.linf = std::max(s.linf, std::abs(t.sign) * std::sqrt(dot(x, x, m)));
            const double H2 = dot(geo.H.col(p), geo.H.col(p), m);
            if (H2 > 0.0) ratios.push_back(t.sign * dot(x, geo.H.col(p), m) / H2);
        }
        if (!ratios.empty()) {
            s.coef_in_H = pairwise_sum(ratios) / double(ratios.size());
            for (double q : ratios) s.coef_spread = std::max(s.coef_spread, std::abs(q - s.coef_in_H));
        }
        r.per_term.push_back(s);
    }
    return r;
}

FieldD boundary_current(const Geometry& geo, const FieldD& B)
{
    const int m = geo.m;
    const GridPtr G = geo.grid;
    const CurvatureCache cc = curvature_cache(geo);
    const FieldD dB = raw_gradient(geo, B);
    const FieldD LB = normal_laplacian(geo, B);
    const FieldD dLH = raw_gradient(geo, cc.LH);
    const FieldD ndv = normal_gradient(geo, cc.v);
    const FieldD DZ = project(geo, divergence(geo, z_field(geo, cc), Proj::none), Proj::normal);
    const FieldD K = pointwise(G, 0, m, [&](long p, double* o) {
        pw::axpy(dot(geo.H.col(p), geo.H.col(p), m), geo.H.col(p), o, m);
    });
    const FieldD ndK = normal_gradient(geo, K);
    return pointwise(G, 1, 1, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* h = geo.h.col(p);
        const double* H = geo.H.col(p);
        const double* Bp = B.col(p);
        const double* dH = cc.dH.col(p);
        const double* A = cc.A.col(p);
        double hu[16 * 16];
        pw::raise2(gi, h, m, hu);
        double dHu[4 * 16];
        pw::raise1(gi, dH, m, dHu);
        const double HB = dot(H, Bp, m);
        const double H2 = dot(H, H, m);
        double Bh[16];
        for (int ik = 0; ik < 16; ++ik) Bh[ik] = dot(Bp, h + ik * m, m);
        for (int j = 0; j < 4; ++j) {
            const double* dHj = dH + j * m;
            const double* dBj = dB.col(p) + j * m;
            double v1 = 0.0, v2 = 0.0, v3 = 0.0;
            for (int ik = 0; ik < 16; ++ik) v1 += 0.5 * dot(dHj, hu + ik * m, m) * Bh[ik];
            v1 += 0.5 * dot(dHj, LB.col(p), m);
            for (int i = 0; i < 4; ++i) {
                const double* dHi = dHu + i * m;  // grad^i H
                v1 -= 2.0 * dot(dHi, h + (i * 4 + j) * m, m) * HB;
                v1 += 2.0 * dot(dHi, Bp, m) * A[i * 4 + j];
            }
            v1 -= 0.5 * dot(cc.LH.col(p), dBj, m);
            v1 += 0.5 * dot(dLH.col(p) + j * m, Bp, m);

            v2 += 0.5 * dot(cc.v.col(p), dBj, m);
            v2 -= 0.5 * dot(ndv.col(p) + j * m, Bp, m);
            for (int i = 0; i < 4; ++i) {
                double Aji = 0.0;  // H.h_j^i
                for (int a = 0; a < 4; ++a) Aji += A[j * 4 + a] * gi[a * 4 + i];
                v2 += 2.0 * Aji * dot(H, dB.col(p) + i * m, m);
            }
            v2 -= 2.0 * dot(DZ.col(p) + j * m, Bp, m);

            v3 += H2 * dot(H, dBj, m);
            v3 -= dot(ndK.col(p) + j * m, Bp, m);
            o[j] = v1 - v2 + 7.0 * v3;
        }
    });
}

AuxTU aux_TU(const Geometry& geo)
{
    const int m = geo.m;
    const GridPtr G = geo.grid;
    const CurvatureCache cc = curvature_cache(geo);
    AuxTU out;
    out.T = pointwise(G, 0, m, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* h = geo.h.col(p);
        const double* H = geo.H.col(p);
        const double* n = cc.nH.col(p);
        const double* A = cc.A.col(p);
        double hu[16 * 16];
        pw::raise2(gi, h, m, hu);
        double n2 = 0.0, A2 = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                n2 += gi[i * 4 + j] * dot(n + i * m, n + j * m, m);
                pw::axpy(2.0 * dot(n + i * m, n + j * m, m), hu + (i * 4 + j) * m, o, m);
            }
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    for (int l = 0; l < 4; ++l) A2 += gi[i * 4 + k] * gi[j * 4 + l] * A[i * 4 + j] * A[k * 4 + l];
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                double s = 0.0;
                for (int i = 0; i < 4; ++i)
                    for (int a = 0; a < 4; ++a) s += A[i * 4 + j] * gi[i * 4 + a] * A[a * 4 + k];
                pw::axpy(-4.0 * s, hu + (j * 4 + k) * m, o, m);
            }
        for (int kl = 0; kl < 16; ++kl) pw::axpy(-0.5 * dot(cc.v.col(p), h + kl * m, m), hu + kl * m, o, m);
        const double H2 = dot(H, H, m);
        pw::axpy(-4.0 * n2 + 4.0 * A2 - 28.0 * H2 * H2, H, o, m);
    });
    const FieldD dLH = raw_gradient(geo, cc.LH);
    const FieldD dv = raw_gradient(geo, cc.v);
    const FieldD DZ = divergence(geo, z_field(geo, cc), Proj::none);
    const FieldD K = pointwise(G, 0, m, [&](long p, double* o) {
        pw::axpy(dot(geo.H.col(p), geo.H.col(p), m), geo.H.col(p), o, m);
    });
    const FieldD dK = raw_gradient(geo, K);
    const FieldD Ulow = pointwise(G, 1, 1, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* h = geo.h.col(p);
        const double* H = geo.H.col(p);
        const double* dH = cc.dH.col(p);
        const double* A = cc.A.col(p);
        double Au[16];
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                double s = 0.0;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) s += gi[j * 4 + a] * gi[k * 4 + b] * A[a * 4 + b];
                Au[j * 4 + k] = s;
            }
        const double H2 = dot(H, H, m);
        double dH2[4];
        for (int a = 0; a < 4; ++a) dH2[a] = 2.0 * dot(H, dH + a * m, m);
        for (int i = 0; i < 4; ++i) {
            double u = 0.0;
            u -= 0.5 * dot(cc.LH.col(p), dH + i * m, m);
            u += 0.5 * dot(H, dLH.col(p) + i * m, m);
            for (int jk = 0; jk < 16; ++jk) u += 0.5 * dot(dH + i * m, h + jk * m, m) * Au[jk];
            for (int j = 0; j < 4; ++j)
                for (int a = 0; a < 4; ++a) {
                    u -= 2.0 * gi[j * 4 + a] * dot(dH + a * m, h + (j * 4 + i) * m, m) * H2;
                    u += gi[j * 4 + a] * dH2[a] * A[i * 4 + j];
                }
            u += 0.5 * dot(dv.col(p) + i * m, H, m);
            u += 2.0 * dot(DZ.col(p) + i * m, H, m);
            u -= 7.0 * dot(dK.col(p) + i * m, H, m);
            o[i] = u;
        }
    });
    out.U = raise_slot(geo, Ulow, 0);
    return out;
}

}  // namespace w4
