#pragma once

#include "w4/shapes.hpp"

namespace w4 {

enum class Proj { none, normal, tangent };

struct Geometry {
    GridPtr grid;
    int m = 0;
    FieldD phi, dphi;   // position and first derivatives (rank 0 / rank 1, R^m-valued)
    FieldD g, ginv;     // rank 2, real
    FieldD sqrtg;       // rank 0, real
    FieldD Gamma;       // row k*16 + i*4 + j holds Gamma^k_ij
    FieldD h;           // rank 2, normal-valued
    FieldD H;           // rank 0
    FieldD Pn;          // m*m rows, column-major normal projector
    double min_det = 0.0;
};

Geometry build_geometry(Jet jet, double degeneracy = 1e-10);

FieldD trace_free(const Geometry& geo);            // h0 = h - g H
FieldD project(const Geometry& geo, const FieldD& f, Proj which);

// (nabla f)_{i J} = d_i f_J - sum_s Gamma^q_{i J_s} f_{J[s->q]}, optionally projected. New index leads.
FieldD raw_gradient(const Geometry& geo, const FieldD& f);
FieldD normal_gradient(const Geometry& geo, const FieldD& f);
FieldD covariant_gradient(const Geometry& geo, const FieldD& f, Proj which);

// (div f)_J = g^{ia} nabla_i f_{a J}, contracted on the first slot, then projected.
FieldD divergence(const Geometry& geo, const FieldD& f, Proj which);

// g^{ia} P_out nabla_i ( P_in nabla_a f ), never materializing the rank+1 intermediate.
FieldD div_of_grad(const Geometry& geo, const FieldD& f, Proj inner, Proj outer);
FieldD normal_laplacian(const Geometry& geo, const FieldD& f);
FieldD normal_bilaplacian(const Geometry& geo, const FieldD& f);
FieldD raw_laplacian(const Geometry& geo, const FieldD& f);

// R_ijkl = h_ik.h_jl - h_il.h_jk, rank 4 real.
FieldD gauss_riemann(const Geometry& geo);

// Index raising on slot s (0-based) of a field.
FieldD raise_slot(const Geometry& geo, const FieldD& f, int slot);

double max_tangential(const Geometry& geo, const FieldD& f);  // max |P_tan f| over interior points
double max_norm(const FieldD& f, bool interior_only = true);   // max ambient-vector norm

bool& strict_normality();

}  // namespace w4
