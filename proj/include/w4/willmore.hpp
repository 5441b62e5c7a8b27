#pragma once

#include "w4/geometry.hpp"

#include <string>
#include <vector>

namespace w4 {

// Energy density |pi_n grad H|^2 - |H.h|^2 + 7|H|^4.
FieldD energy_density(const Geometry& geo);
// Integral of the density (optionally times a weight such as gamma^p) against sqrt(det g).
double total_energy(const Geometry& geo, const FieldD* weight = nullptr);

struct Summand {
    std::string name;   // e.g. "W2: 4(H.h_ij)(H.h^i_k)h^jk"
    int block = 1;      // 1, 2 or 3
    double sign = 1.0;  // how the summand enters W: +1 (W1), -1 (W2), +7 (W3)
    FieldD value;       // the summand exactly as written inside its block
};

struct WillmoreFields {
    std::vector<Summand> terms;
    FieldD W1, W2, W3, W;
};

WillmoreFields willmore_terms(const Geometry& geo);
FieldD willmore(const Geometry& geo);

struct TermStat {
    std::string name;
    double linf = 0.0;         // max |sign * value|
    double coef_in_H = 0.0;    // mean of (sign*value . H)/|H|^2 over the interior
    double coef_spread = 0.0;  // max deviation of that ratio from its mean
};

struct ResidualNorms {
    double linf = 0.0;
    double l2 = 0.0;
    std::vector<TermStat> per_term;
};

ResidualNorms residual_norms(const Geometry& geo, const WillmoreFields& wf, const FieldD* weight = nullptr);

// Covariant boundary current V_j = V1 - V2 + 7 V3 for a normal variation B (rank 1, real).
FieldD boundary_current(const Geometry& geo, const FieldD& B);

struct AuxTU {
    FieldD T;  // rank 0, R^m
    FieldD U;  // rank 1, real, contravariant components U^i
};

AuxTU aux_TU(const Geometry& geo);

// Shared intermediates.
struct CurvatureCache {
    FieldD nH;    // pi_n grad H
    FieldD dH;    // raw grad H
    FieldD A;     // H.h_ij (real rank 2)
    FieldD v;     // (H.h^ij) h_ij
    FieldD LH;    // normal Laplacian of H
};

CurvatureCache curvature_cache(const Geometry& geo, bool with_laplacian = true);

// Z_ij = (H.h_ij) H and its raw divergence g^{ab} nabla_a Z_bj.
FieldD z_field(const Geometry& geo, const CurvatureCache& cc);

}  // namespace w4
