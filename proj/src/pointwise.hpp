#pragma once

#include "w4/geometry.hpp"

namespace w4::pw {

template <class Fn>
FieldD pointwise(GridPtr g, int rank, int m, Fn fn)
{
    FieldD out(g, rank, m);
    const long P = g->size();
#pragma omp parallel for schedule(static)
    for (long p = 0; p < P; ++p) fn(p, out.col(p));
    return out;
}

inline double dot(const double* a, const double* b, int m)
{
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += a[c] * b[c];
    return s;
}

inline void axpy(double s, const double* x, double* y, int m)
{
    for (int c = 0; c < m; ++c) y[c] += s * x[c];
}

// out^{ij} = g^{ia} g^{jb} t_ab for an R^m-valued rank-2 array
inline void raise2(const double* gi, const double* t, int m, double* out)
{
    double tmp[16 * 16];
    for (int i = 0; i < 4; ++i)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < m; ++c) {
                double s = 0.0;
                for (int a = 0; a < 4; ++a) s += gi[i * 4 + a] * t[(a * 4 + b) * m + c];
                tmp[(i * 4 + b) * m + c] = s;
            }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int c = 0; c < m; ++c) {
                double s = 0.0;
                for (int b = 0; b < 4; ++b) s += gi[j * 4 + b] * tmp[(i * 4 + b) * m + c];
                out[(i * 4 + j) * m + c] = s;
            }
}

// out^i = g^{ia} t_a for an R^m-valued rank-1 array
inline void raise1(const double* gi, const double* t, int m, double* out)
{
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < m; ++c) {
            double s = 0.0;
            for (int a = 0; a < 4; ++a) s += gi[i * 4 + a] * t[a * m + c];
            out[i * m + c] = s;
        }
}

}  // namespace w4::pw
