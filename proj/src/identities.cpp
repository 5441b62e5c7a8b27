#include "w4/identities.hpp"

#include "pointwise.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace w4 {

using pw::axpy;
using pw::dot;
using pw::pointwise;

namespace {

const char* kNames[] = {"codazzi", "tracefree_div", "laplacian_split", "simon", "interchange_H",
                        "interchange_h", "prop_32", "lemma_A1", "lemma_A2", "lemma_A3"};

// Running residual: R = lhs - sum of terms, with the scale tracked as the largest term.
struct Accum {
    FieldD R;
    double scale = 0.0;
    explicit Accum(FieldD lhs) : R(std::move(lhs)) { scale = max_norm(R); }
    void sub(const FieldD& t, double coef = 1.0)
    {
        scale = std::max(scale, std::abs(coef) * max_norm(t));
        R.v -= coef * t.v;
    }
    PointwiseResidual done(double floor_scale) const { return {max_norm(R), std::max(scale, floor_scale)}; }
};

double max_h(const Geometry& geo) { return max_norm(geo.h); }

// h with both indices raised, and mixed h^i_k = g^{ia} h_ak, at one point
struct HAt {
    double up[16 * 16];
    double mix[16 * 16];
    HAt(const double* gi, const double* h, int m)
    {
        pw::raise2(gi, h, m, up);
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k)
                for (int c = 0; c < m; ++c) {
                    double s = 0.0;
                    for (int a = 0; a < 4; ++a) s += gi[i * 4 + a] * h[(a * 4 + k) * m + c];
                    mix[(i * 4 + k) * m + c] = s;
                }
    }
};

PointwiseResidual codazzi(const Geometry& geo)
{
    const int m = geo.m;
    const FieldD T = normal_gradient(geo, geo.h);
    const FieldD R = pointwise(geo.grid, 3, m, [&](long p, double* o) {
        const double* t = T.col(p);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    for (int c = 0; c < m; ++c)
                        o[((i * 4 + j) * 4 + k) * m + c] = t[((i * 4 + j) * 4 + k) * m + c] - t[((j * 4 + i) * 4 + k) * m + c];
    });
    const double k = max_h(geo);
    return {max_norm(R), std::max(max_norm(T), k * k)};
}

PointwiseResidual tracefree_div(const Geometry& geo)
{
    const FieldD h0 = trace_free(geo);
    Accum a(divergence(geo, h0, Proj::normal));
    a.sub(normal_gradient(geo, geo.H), 3.0);
    const double k = max_h(geo);
    return a.done(k * k);
}

PointwiseResidual laplacian_split(const Geometry& geo)
{
    const int m = geo.m;
    const CurvatureCache cc = curvature_cache(geo);
    Accum a(raw_laplacian(geo, geo.H));
    a.sub(cc.LH);
    a.sub(cc.v, -1.0);
    const FieldD tang = pointwise(geo.grid, 0, m, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* h = geo.h.col(p);
        const double* dH = cc.dH.col(p);
        const double* H = geo.H.col(p);
        const double* dphi = geo.dphi.col(p);
        for (int k = 0; k < 4; ++k) {
            double s = 0.0;  // (grad_s H . h^{sk})
            double q = 0.0;  // grad^k |H|^2
            for (int a2 = 0; a2 < 4; ++a2) {
                for (int b = 0; b < 4; ++b)
                    for (int s2 = 0; s2 < 4; ++s2)
                        s += gi[s2 * 4 + a2] * gi[k * 4 + b] * dot(dH + s2 * m, h + (a2 * 4 + b) * m, m);
                q += gi[k * 4 + a2] * 2.0 * dot(H, dH + a2 * m, m);
            }
            axpy(2.0 * s + 2.0 * q, dphi + k * m, o, m);
        }
    });
    a.sub(tang, -1.0);
    const double k = max_h(geo);
    return a.done(k * k * k);
}

PointwiseResidual simon(const Geometry& geo)
{
    const int m = geo.m;
    const FieldD nH = normal_gradient(geo, geo.H);
    Accum a(normal_laplacian(geo, geo.h));
    a.sub(normal_gradient(geo, nH), 4.0);
    const FieldD alg = pointwise(geo.grid, 2, m, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* h = geo.h.col(p);
        const double* H = geo.H.col(p);
        const HAt t(gi, h, m);
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                double* out = o + (j * 4 + k) * m;
                for (int i = 0; i < 4; ++i) {
                    // 4 (H.h_ij) h^i_k
                    axpy(4.0 * dot(H, h + (i * 4 + j) * m, m), t.mix + (i * 4 + k) * m, out, m);
                    for (int e = 0; e < 4; ++e) {
                        // -(h_ie.h_jk) h^ie
                        axpy(-dot(h + (i * 4 + e) * m, h + (j * 4 + k) * m, m), t.up + (i * 4 + e) * m, out, m);
                        // +2 (h^i_k.h_je) h_i^e
                        axpy(2.0 * dot(t.mix + (i * 4 + k) * m, h + (j * 4 + e) * m, m), t.mix + (e * 4 + i) * m, out, m);
                        // -(h^i_k.h_ie) h^e_j
                        axpy(-dot(t.mix + (i * 4 + k) * m, h + (i * 4 + e) * m, m), t.mix + (e * 4 + j) * m, out, m);
                        // -(h_ie.h^i_j) h^e_k
                        axpy(-dot(h + (i * 4 + e) * m, t.mix + (i * 4 + j) * m, m), t.mix + (e * 4 + k) * m, out, m);
                    }
                }
            }
    });
    a.sub(alg);
    const double k = max_h(geo);
    return a.done(k * k * k);
}

PointwiseResidual interchange_H(const Geometry& geo)
{
    const int m = geo.m;
    const CurvatureCache cc = curvature_cache(geo);
    Accum a(normal_laplacian(geo, cc.nH));
    a.sub(normal_gradient(geo, cc.LH));
    const FieldD h0 = trace_free(geo);
    const FieldD alg = pointwise(geo.grid, 1, m, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* H = geo.H.col(p);
        const double* h = geo.h.col(p);
        const double* z = h0.col(p);
        const double* n = cc.nH.col(p);
        const double* dH = cc.dH.col(p);
        const double H2 = dot(H, H, m);
        double h0u[16 * 16];
        pw::raise2(gi, z, m, h0u);
        double dH2[4];
        for (int b = 0; b < 4; ++b) dH2[b] = 2.0 * dot(H, dH + b * m, m);
        for (int k = 0; k < 4; ++k) {
            double* out = o + k * m;
            // 3|H|^2 pi_n grad_k H
            axpy(3.0 * H2, n + k * m, out, m);
            // [2 (H.h0_k^e) - (h0_ki.h0^ie)] pi_n grad_e H
            for (int e = 0; e < 4; ++e) {
                double c = 0.0;
                for (int b = 0; b < 4; ++b) c += 2.0 * gi[e * 4 + b] * dot(H, z + (k * 4 + b) * m, m);
                for (int i = 0; i < 4; ++i) c -= dot(z + (k * 4 + i) * m, h0u + (i * 4 + e) * m, m);
                axpy(c, n + e * m, out, m);
            }
            // U_k algebraic part: -2 (grad_s H.h^{sj}) h_jk - 2 grad^i|H|^2 h_ik
            for (int j = 0; j < 4; ++j) {
                double s = 0.0, q = 0.0;
                for (int s2 = 0; s2 < 4; ++s2)
                    for (int a2 = 0; a2 < 4; ++a2)
                        for (int b = 0; b < 4; ++b) s += gi[s2 * 4 + a2] * gi[j * 4 + b] * dot(dH + s2 * m, h + (a2 * 4 + b) * m, m);
                for (int b = 0; b < 4; ++b) q += gi[j * 4 + b] * dH2[b];
                axpy(-2.0 * s - 2.0 * q, h + (j * 4 + k) * m, out, m);
            }
        }
    });
    a.sub(alg);
    // remaining U_k: -pi_n grad_k v - pi_n Lap pi_T grad_k H - pi_n grad^j pi_T grad_j pi_n grad_k H
    a.sub(normal_gradient(geo, cc.v), -1.0);
    a.sub(div_of_grad(geo, project(geo, cc.dH, Proj::tangent), Proj::none, Proj::normal), -1.0);
    a.sub(div_of_grad(geo, cc.nH, Proj::tangent, Proj::normal), -1.0);
    const double k = max_h(geo);
    return a.done(k * k * k * k);
}

// Commutator g^{ia}[nabla_i Q_ajkl + P_ijakl] for Delta of nabla h, with R the Gauss curvature and S = nabla h.
FieldD interchange_commutator(const Geometry& geo, const FieldD& S)
{
    const int m = geo.m;
    return pointwise(geo.grid, 3, m, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* h = geo.h.col(p);
        const double* s = S.col(p);
        // R_ijkl and nabla_a R_ijkl from the Gauss equation
        double hh[16][16];
        for (int x = 0; x < 16; ++x)
            for (int y = 0; y < 16; ++y) hh[x][y] = dot(h + x * m, h + y * m, m);
        double sh[64][16];  // S_a,x . h_y
        for (int x = 0; x < 64; ++x)
            for (int y = 0; y < 16; ++y) sh[x][y] = dot(s + x * m, h + y * m, m);
        auto R = [&](int i, int j, int k, int l) { return hh[i * 4 + k][j * 4 + l] - hh[i * 4 + l][j * 4 + k]; };
        auto dR = [&](int a, int i, int j, int k, int l) {
            return sh[a * 16 + i * 4 + k][j * 4 + l] + sh[a * 16 + j * 4 + l][i * 4 + k] -
                   sh[a * 16 + i * 4 + l][j * 4 + k] - sh[a * 16 + j * 4 + k][i * 4 + l];
        };
        // raise the last index: R_ijk^q = R_ijkb g^{bq}
        double Ru[256], dRu[1024];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k)
                    for (int q = 0; q < 4; ++q) {
                        double r = 0.0;
                        for (int b = 0; b < 4; ++b)
                            if (gi[b * 4 + q] != 0.0) r += R(i, j, k, b) * gi[b * 4 + q];
                        Ru[((i * 4 + j) * 4 + k) * 4 + q] = r;
                        for (int a = 0; a < 4; ++a) {
                            double d = 0.0;
                            for (int b = 0; b < 4; ++b)
                                if (gi[b * 4 + q] != 0.0) d += dR(a, i, j, k, b) * gi[b * 4 + q];
                            dRu[(((a * 4 + i) * 4 + j) * 4 + k) * 4 + q] = d;
                        }
                    }
        auto RU = [&](int i, int j, int k, int q) { return Ru[((i * 4 + j) * 4 + k) * 4 + q]; };
        auto dRU = [&](int a, int i, int j, int k, int q) { return dRu[(((a * 4 + i) * 4 + j) * 4 + k) * 4 + q]; };
        auto Hx = [&](int k, int l) { return h + (k * 4 + l) * m; };
        auto Sx = [&](int a, int k, int l) { return s + ((a * 4 + k) * 4 + l) * m; };
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                for (int l = 0; l < 4; ++l) {
                    double* out = o + ((j * 4 + k) * 4 + l) * m;
                    for (int i = 0; i < 4; ++i)
                        for (int a = 0; a < 4; ++a) {
                            const double w = gi[i * 4 + a];
                            if (w == 0.0) continue;
                            auto add = [&](double c, const double* x) {
                                if (c != 0.0) axpy(w * c, x, out, m);
                            };
                            for (int q = 0; q < 4; ++q) {
                                // nabla_i Q_ajkl, Q_ajkl = R_ajk^q h_ql + R_ajl^q h_kq
                                add(dRU(i, a, j, k, q), Hx(q, l));
                                add(RU(a, j, k, q), Sx(i, q, l));
                                add(dRU(i, a, j, l, q), Hx(k, q));
                                add(RU(a, j, l, q), Sx(i, k, q));
                                // P_ijakl = R_ija^q S_qkl + R_ijk^q S_aql + R_ijl^q S_akq
                                add(RU(i, j, a, q), Sx(q, k, l));
                                add(RU(i, j, k, q), Sx(a, q, l));
                                add(RU(i, j, l, q), Sx(a, k, q));
                            }
                        }
                }
    });
}

PointwiseResidual interchange_h(const Geometry& geo)
{
    const FieldD S = raw_gradient(geo, geo.h);
    Accum a(normal_laplacian(geo, project(geo, S, Proj::normal)));
    {
        const FieldD G1 = raw_gradient(geo, normal_laplacian(geo, geo.h));
        a.sub(project(geo, G1, Proj::normal));
        a.sub(project(geo, G1, Proj::tangent));
    }
    {
        const FieldD T = project(geo, S, Proj::normal);
        a.sub(raw_gradient(geo, divergence(geo, T, Proj::tangent)));
    }
    const FieldD PTS = project(geo, S, Proj::tangent);
    a.sub(raw_gradient(geo, divergence(geo, PTS, Proj::none)));
    a.sub(interchange_commutator(geo, S));
    a.sub(div_of_grad(geo, S, Proj::none, Proj::tangent), -1.0);
    a.sub(div_of_grad(geo, S, Proj::tangent, Proj::normal), -1.0);
    a.sub(div_of_grad(geo, PTS, Proj::normal, Proj::normal), -1.0);
    const double k = max_h(geo);
    return a.done(k * k * k * k);
}

FieldD scalar_of(const Geometry& geo, const std::function<double(long)>& fn)
{
    return pointwise(geo.grid, 0, 1, [&](long p, double* o) { o[0] = fn(p); });
}

}  // namespace

std::string identity_name(IdentityId id) { return kNames[static_cast<int>(id)]; }

IdentityId parse_identity(const std::string& s)
{
    for (int i = 0; i < 10; ++i)
        if (s == kNames[i]) return static_cast<IdentityId>(i);
    throw std::invalid_argument("unknown identity '" + s + "'");
}

bool is_integral(IdentityId id) { return static_cast<int>(id) >= static_cast<int>(IdentityId::prop_32); }

std::vector<IdentityId> all_identities()
{
    std::vector<IdentityId> v;
    for (int i = 0; i < 10; ++i) v.push_back(static_cast<IdentityId>(i));
    return v;
}

PointwiseResidual pointwise_identity(IdentityId id, const Geometry& geo)
{
    switch (id) {
    case IdentityId::codazzi: return codazzi(geo);
    case IdentityId::tracefree_div: return tracefree_div(geo);
    case IdentityId::laplacian_split: return laplacian_split(geo);
    case IdentityId::simon: return simon(geo);
    case IdentityId::interchange_H: return interchange_H(geo);
    case IdentityId::interchange_h: return interchange_h(geo);
    default: throw std::invalid_argument(identity_name(id) + " is an integral identity");
    }
}

IntegralFields::IntegralFields(const Geometry& geo) : grid_(geo.grid), sqrtg_(geo.sqrtg)
{
    const int m = geo.m;
    const CurvatureCache cc = curvature_cache(geo);
    const WillmoreFields wf = willmore_terms(geo);
    const FieldD dv = raw_gradient(geo, cc.v);
    const FieldD DZ = divergence(geo, z_field(geo, cc), Proj::none);
    const FieldD K = pointwise(geo.grid, 0, m, [&](long p, double* o) {
        axpy(dot(geo.H.col(p), geo.H.col(p), m), geo.H.col(p), o, m);
    });
    const FieldD dK = raw_gradient(geo, K);
    const FieldD dLH = raw_gradient(geo, cc.LH);
    const AuxTU tu = aux_TU(geo);
    auto H = [&](long p) { return geo.H.col(p); };

    FieldD w1ef(geo.grid, 0, m);
    for (const auto& t : wf.terms)
        if (t.name.rfind("W1: +2 (pi_n", 0) == 0 || t.name.rfind("W1: -4", 0) == 0) w1ef.v += t.value.v;

    s_["W.H"] = scalar_of(geo, [&](long p) { return dot(wf.W.col(p), H(p), m); });
    s_["W1.H"] = scalar_of(geo, [&](long p) { return dot(wf.W1.col(p), H(p), m); });
    s_["W2.H"] = scalar_of(geo, [&](long p) { return dot(wf.W2.col(p), H(p), m); });
    s_["W3.H"] = scalar_of(geo, [&](long p) { return dot(wf.W3.col(p), H(p), m); });
    s_["|LH|^2"] = scalar_of(geo, [&](long p) { return dot(cc.LH.col(p), cc.LH.col(p), m); });
    s_["nH^j.grad_j v"] = scalar_of(geo, [&](long p) {
        const double* gi = geo.ginv.col(p);
        double s = 0.0;
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) s += gi[j * 4 + k] * dot(cc.nH.col(p) + j * m, dv.col(p) + k * m, m);
        return s;
    });
    s_["(dH^j.h^k_j)(H.d_kH)"] = scalar_of(geo, [&](long p) {
        const double* gi = geo.ginv.col(p);
        const double* h = geo.h.col(p);
        const double* dH = cc.dH.col(p);
        double s = 0.0;
        for (int j = 0; j < 4; ++j)
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    for (int k = 0; k < 4; ++k)
                        s += gi[j * 4 + a] * gi[b * 4 + k] * dot(dH + a * m, h + (j * 4 + b) * m, m) * dot(H(p), dH + k * m, m);
        return s;
    });
    s_["(H.h^k_j)(nH^j.d_kH)"] = scalar_of(geo, [&](long p) {
        const double* gi = geo.ginv.col(p);
        const double* A = cc.A.col(p);
        double s = 0.0;
        for (int j = 0; j < 4; ++j)
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    for (int k = 0; k < 4; ++k)
                        s += A[j * 4 + b] * gi[b * 4 + k] * gi[j * 4 + a] * dot(cc.nH.col(p) + a * m, cc.dH.col(p) + k * m, m);
        return s;
    });
    s_["(W1e+W1f).H"] = scalar_of(geo, [&](long p) { return dot(w1ef.col(p), H(p), m); });
    s_["grad_j Z^ij.d_iH"] = scalar_of(geo, [&](long p) {
        const double* gi = geo.ginv.col(p);
        double s = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int b = 0; b < 4; ++b) s += gi[i * 4 + b] * dot(DZ.col(p) + b * m, cc.dH.col(p) + i * m, m);
        return s;
    });
    s_["AAA"] = scalar_of(geo, [&](long p) {
        const double* gi = geo.ginv.col(p);
        const double* A = cc.A.col(p);
        double Am[16];  // A^i_k
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k) {
                double s = 0.0;
                for (int a = 0; a < 4; ++a) s += gi[i * 4 + a] * A[a * 4 + k];
                Am[i * 4 + k] = s;
            }
        double s = 0.0;  // A_ij A^i_k A^jk = tr(A^. A^. A^.)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) s += Am[i * 4 + j] * Am[j * 4 + k] * Am[k * 4 + i];
        return s;
    });
    s_["|A|^2|H|^2"] = scalar_of(geo, [&](long p) { return dot(cc.v.col(p), H(p), m) * dot(H(p), H(p), m); });
    s_["(v.h_kl)A^kl"] = scalar_of(geo, [&](long p) {
        const double* gi = geo.ginv.col(p);
        const double* A = cc.A.col(p);
        double s = 0.0;
        for (int k = 0; k < 4; ++k)
            for (int l = 0; l < 4; ++l)
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b)
                        s += gi[k * 4 + a] * gi[l * 4 + b] * A[a * 4 + b] * dot(cc.v.col(p), geo.h.col(p) + (k * 4 + l) * m, m);
        return s;
    });
    s_["grad^j K.nH_j"] = scalar_of(geo, [&](long p) {
        const double* gi = geo.ginv.col(p);
        double s = 0.0;
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) s += gi[j * 4 + k] * dot(dK.col(p) + j * m, cc.nH.col(p) + k * m, m);
        return s;
    });
    s_["|H|^6"] = scalar_of(geo, [&](long p) {
        const double h2 = dot(H(p), H(p), m);
        return h2 * h2 * h2;
    });
    s_["T.H"] = scalar_of(geo, [&](long p) { return dot(tu.T.col(p), H(p), m); });

    auto contravariant = [&](const std::function<void(long, double*)>& low) {
        const FieldD L = pointwise(geo.grid, 1, 1, low);
        return raise_slot(geo, L, 0);
    };
    c_["U1"] = contravariant([&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        const double* h = geo.h.col(p);
        const double* dH = cc.dH.col(p);
        const double* A = cc.A.col(p);
        const double H2 = dot(H(p), H(p), m);
        double Au[16];
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                double s = 0.0;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) s += gi[j * 4 + a] * gi[k * 4 + b] * A[a * 4 + b];
                Au[j * 4 + k] = s;
            }
        for (int i = 0; i < 4; ++i) {
            double u = -0.5 * dot(cc.LH.col(p), dH + i * m, m) + 0.5 * dot(dLH.col(p) + i * m, H(p), m);
            for (int jk = 0; jk < 16; ++jk) u += 0.5 * dot(dH + i * m, h + jk * m, m) * Au[jk];
            for (int j = 0; j < 4; ++j)
                for (int a = 0; a < 4; ++a) {
                    u -= 2.0 * gi[j * 4 + a] * dot(dH + a * m, h + (j * 4 + i) * m, m) * H2;
                    u += 2.0 * A[i * 4 + j] * gi[j * 4 + a] * dot(H(p), dH + a * m, m);
                }
            o[i] = u;
        }
    });
    c_["U2"] = contravariant([&](long p, double* o) {
        for (int k = 0; k < 4; ++k)
            o[k] = 0.5 * dot(dv.col(p) + k * m, H(p), m) + 2.0 * dot(DZ.col(p) + k * m, H(p), m);
    });
    c_["U3"] = contravariant([&](long p, double* o) {
        for (int j = 0; j < 4; ++j) o[j] = dot(dK.col(p) + j * m, H(p), m);
    });
    c_["U"] = tu.U;
}

double IntegralFields::integral(const std::string& key, const CutoffFields& cut) const
{
    FieldD f = s_.at(key);
    f.v.array() *= cut.gamma_p.v.array();
    return integrate(f, sqrtg_);
}

double IntegralFields::current(const std::string& key, const CutoffFields& cut) const
{
    const FieldD& U = c_.at(key);
    FieldD f(grid_, 0, 1);
    for (long p = 0; p < f.points(); ++p) {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) s += U.v(i, p) * cut.gamma_pm1_dgamma.v(i, p);
        f.v(0, p) = s;
    }
    return integrate(f, sqrtg_);
}

IntegralResidual IntegralFields::evaluate(IdentityId id, const CutoffFields& cut) const
{
    if (*cut.gamma.grid != *grid_) throw std::invalid_argument("cutoff lives on a different grid");
    IntegralResidual r;
    const double p = cut.p;
    std::vector<std::pair<std::string, double>>& t = r.summands;
    auto I = [&](const std::string& k) { return integral(k, cut); };
    auto J = [&](const std::string& k) { return current(k, cut); };
    switch (id) {
    case IdentityId::lemma_A1:
        r.lhs = 0.5 * I("|LH|^2");
        t = {{"-W1.H", -I("W1.H")},
             {"+1/2 nH^j.grad_j v", 0.5 * I("nH^j.grad_j v")},
             {"-2 (dH^j.h^k_j)(H.d_kH)", -2.0 * I("(dH^j.h^k_j)(H.d_kH)")},
             {"+2 (H.h^k_j)(nH^j.d_kH)", 2.0 * I("(H.h^k_j)(nH^j.d_kH)")},
             {"+(2(nH.nH)h - 4|nH|^2 H).H", I("(W1e+W1f).H")},
             {"+p U1^i gamma^(p-1) d_i gamma", p * J("U1")}};
        break;
    case IdentityId::lemma_A2:
        r.lhs = I("W2.H");
        t = {{"-1/2 grad^k v.nH_k", -0.5 * I("nH^j.grad_j v")},
             {"-2 grad_j Z^ij.d_iH", -2.0 * I("grad_j Z^ij.d_iH")},
             {"+4 A_ij A^i_k A^jk", 4.0 * I("AAA")},
             {"-4 |A|^2 |H|^2", -4.0 * I("|A|^2|H|^2")},
             {"+1/2 (v.h_kl) A^kl", 0.5 * I("(v.h_kl)A^kl")},
             {"-p U2^k gamma^(p-1) d_k gamma", -p * J("U2")}};
        break;
    case IdentityId::lemma_A3:
        r.lhs = I("W3.H");
        t = {{"-grad^j K.nH_j", -I("grad^j K.nH_j")},
             {"+|H|^2 |A|^2", I("|A|^2|H|^2")},
             {"-4 |H|^6", -4.0 * I("|H|^6")},
             {"-p U3^j gamma^(p-1) d_j gamma", -p * J("U3")}};
        break;
    case IdentityId::prop_32:
        r.lhs = I("W.H");
        t = {{"-1/2 |LH|^2", -0.5 * I("|LH|^2")},
             {"+nH^j.grad_j v", I("nH^j.grad_j v")},
             {"-2 (dH^j.h^k_j)(H.d_kH)", -2.0 * I("(dH^j.h^k_j)(H.d_kH)")},
             {"+2 (H.h^k_j)(nH^j.d_kH)", 2.0 * I("(H.h^k_j)(nH^j.d_kH)")},
             {"+2 grad_j Z^ij.d_iH", 2.0 * I("grad_j Z^ij.d_iH")},
             {"-7 grad^j K.nH_j", -7.0 * I("grad^j K.nH_j")},
             {"+T.H", I("T.H")},
             {"+p U^i gamma^(p-1) d_i gamma", p * J("U")}};
        break;
    default: throw std::invalid_argument(identity_name(id) + " is a pointwise identity");
    }
    r.scale = std::abs(r.lhs);
    for (const auto& [name, val] : t) {
        r.rhs += val;
        r.scale = std::max(r.scale, std::abs(val));
    }
    if (id == IdentityId::prop_32) {
        // T as written drops the 7|H|^2|H.h|^2 term produced by integrating W3 by parts
        r.literal_residual = std::abs(r.lhs - r.rhs);
        const double extra = 7.0 * I("|A|^2|H|^2");
        t.push_back({"+7 |H|^2 |A|^2 (absent from the displayed T)", extra});
        r.rhs += extra;
        r.scale = std::max(r.scale, std::abs(extra));
    }
    r.residual = std::abs(r.lhs - r.rhs);
    if (id != IdentityId::prop_32) r.literal_residual = r.residual;
    return r;
}

std::string shape_key(const ShapeSpec& s)
{
    std::ostringstream o;
    o.precision(17);
    o << kind_name(s.kind);
    for (double r : s.radii) o << ',' << r;
    o << "|c" << s.clamp << "|w" << s.window << "|s" << s.scale;
    if (s.perturbation) {
        const Perturbation& q = *s.perturbation;
        o << "|e" << q.eps << "|r" << q.rho << "|" << int(q.envelope) << int(q.profile) << int(q.along_H);
        for (double c : q.center) o << ',' << c;
        o << '|';
        for (double d : q.direction) o << ',' << d;
    }
    return o.str();
}

std::shared_ptr<IntegralFields> IdentityRunner::integral_fields(const ShapeSpec& s, int n)
{
    const std::string key = shape_key(s) + "#" + std::to_string(n);
    auto it = integral_cache_.find(key);
    if (it != integral_cache_.end()) return it->second;
    auto f = std::make_shared<IntegralFields>(*geometry(s, n));
    integral_cache_[key] = f;
    return f;
}

std::shared_ptr<const Geometry> IdentityRunner::geometry(const ShapeSpec& s, int n)
{
    const std::string key = shape_key(s) + "#" + std::to_string(n);
    if (key != geometry_key_) {
        geometry_.reset();
        geometry_ = std::make_shared<const Geometry>(build_geometry(shape_jet(s, shape_grid(s, n, order_))));
        geometry_key_ = key;
    }
    return geometry_;
}

PointwiseResidual IdentityRunner::pointwise(IdentityId id, const ShapeSpec& s, int n)
{
    const std::string key = identity_name(id) + "#" + shape_key(s) + "#" + std::to_string(n);
    auto it = pointwise_cache_.find(key);
    if (it != pointwise_cache_.end()) return it->second;
    const PointwiseResidual r = pointwise_identity(id, *geometry(s, n));
    pointwise_cache_[key] = r;
    return r;
}

IdentityResult IdentityRunner::run(const IdentityCase& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    IdentityResult out;
    out.c = c;
    if (c.grids.empty()) throw std::invalid_argument("identity case needs at least one grid");
    for (int n : c.grids) {
        const GridPtr g = shape_grid(c.shape, n, order_);
        double spacing = 0.0;
        for (int a = 0; a < 4; ++a) spacing = std::max(spacing, g->spacing[a]);
        out.spacings.push_back(spacing);
        if (is_integral(c.id)) {
            if (!c.gamma) throw std::invalid_argument(identity_name(c.id) + " needs a cutoff");
            auto f = integral_fields(c.shape, n);
            const CutoffFields cut = cutoff_field(f->grid(), c.gamma->center, c.gamma->rho, c.p);
            const IntegralResidual r = f->evaluate(c.id, cut);
            out.residuals.push_back(r.residual);
            out.scales.push_back(r.scale);
            out.literal_residuals.push_back(r.literal_residual);
            out.summands = r.summands;
            out.summands.insert(out.summands.begin(), std::make_pair(std::string("LHS"), r.lhs));
        } else {
            const PointwiseResidual r = pointwise(c.id, c.shape, n);
            out.residuals.push_back(r.residual);
            out.scales.push_back(r.scale);
        }
    }
    // tolerance on the finest grid; the coarser one only contributes the observed order
    const double fine = out.residuals.back();
    bool ok = fine <= std::max(c.tol * out.scales.back(), 1e-10);
    bool floor = true;
    for (size_t i = 0; i < out.residuals.size(); ++i)
        floor = floor && out.residuals[i] <= std::max(kRoundingFloor * out.scales[i], 1e-10);
    out.at_floor = floor;
    if (out.residuals.size() >= 2) {
        const size_t a = out.residuals.size() - 2, b = a + 1;
        if (out.residuals[a] > 0.0 && out.residuals[b] > 0.0)
            out.order = std::log(out.residuals[a] / out.residuals[b]) / std::log(out.spacings[a] / out.spacings[b]);
        ok = ok && (floor || out.order >= 2.0);
    }
    out.pass = ok;
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

namespace {

std::vector<double> split_numbers(const std::string& s, char sep)
{
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (item.empty()) continue;
        v.push_back(std::stod(item));
    }
    return v;
}

}  // namespace

std::vector<IdentityCase> parse_manifest(const std::string& text, const std::string& base_dir)
{
    std::vector<IdentityCase> out;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::stringstream ls(line);
        std::vector<std::string> tok;
        std::string t;
        while (ls >> t) tok.push_back(t);
        if (tok.empty()) continue;
        const std::string where = "manifest line " + std::to_string(lineno) + ": ";
        if (tok.size() != 6) throw std::invalid_argument(where + "expected 6 fields: id shape grid gamma p tol");
        try {
            IdentityCase c;
            c.id = parse_identity(tok[0]);
            if (tok[1].rfind("file:", 0) == 0) {
                std::filesystem::path path = tok[1].substr(5);
                if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
                c.shape = load_shape_file(path.string());
            } else {
                const auto colon = tok[1].find(':');
                c.shape.kind = parse_kind(tok[1].substr(0, colon));
                if (colon != std::string::npos) c.shape.radii = split_numbers(tok[1].substr(colon + 1), ',');
                if (c.shape.radii.empty()) c.shape.radii = default_radii(c.shape.kind);
            }
            validate(c.shape);
            for (double n : split_numbers(tok[2], '/')) c.grids.push_back(static_cast<int>(n));
            if (tok[3] != "-") {
                const auto gc = tok[3].find(':');
                if (gc == std::string::npos) throw std::invalid_argument("gamma needs cx,cy,cz,cw:rho");
                const auto cv = split_numbers(tok[3].substr(0, gc), ',');
                if (cv.size() != 4) throw std::invalid_argument("gamma center needs 4 values");
                GammaSpec gs;
                for (int a = 0; a < 4; ++a) gs.center[a] = cv[a];
                gs.rho = std::stod(tok[3].substr(gc + 1));
                c.gamma = gs;
            }
            c.p = std::stod(tok[4]);
            c.tol = std::stod(tok[5]);
            c.label = tok[0] + " " + tok[1] + " " + tok[2] + " " + tok[3] + " " + tok[4] + " " + tok[5];
            if (is_integral(c.id) && !c.gamma) throw std::invalid_argument("integral identity needs a cutoff");
            out.push_back(std::move(c));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + e.what());
        }
    }
    return out;
}

std::vector<IdentityCase> load_manifest(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open manifest " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), std::filesystem::path(path).parent_path().string());
}

double sobolev_ratio(const Geometry& geo, const FieldD& u)
{
    const int m = geo.m;
    const FieldD du = raw_gradient(geo, u);
    const FieldD num = pointwise(geo.grid, 0, 1, [&](long p, double* o) { o[0] = std::pow(std::abs(u.v(0, p)), 4.0 / 3.0); });
    const FieldD den = pointwise(geo.grid, 0, 1, [&](long p, double* o) {
        const double* gi = geo.ginv.col(p);
        double g2 = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) g2 += gi[i * 4 + j] * du.v(i, p) * du.v(j, p);
        o[0] = std::sqrt(g2) + std::sqrt(dot(geo.H.col(p), geo.H.col(p), m)) * std::abs(u.v(0, p));
    });
    const double d = integrate(den, geo.sqrtg);
    return d > 0.0 ? std::pow(integrate(num, geo.sqrtg), 0.75) / d : 0.0;
}

}  // namespace w4
