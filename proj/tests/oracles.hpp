#pragma once

// Closed forms for products of round spheres S^k1(r1) x ... in R^m.
// With nu_i the outward unit normal of factor i: h = -sum (1/r_i) g_i nu_i, H = sum a_i nu_i,
// a_i = -k_i / (4 r_i), and H.h = sum c_i g_i with c_i = k_i / (4 r_i^2). pi_n grad H = 0.

#include <cmath>
#include <vector>

namespace oracle {

struct Factor {
    int k;
    double r;
};

inline double H2(const std::vector<Factor>& f)
{
    double s = 0.0;
    for (const Factor& x : f) s += (x.k / (4.0 * x.r)) * (x.k / (4.0 * x.r));
    return s;
}

inline double A2(const std::vector<Factor>& f)
{
    double s = 0.0;
    for (const Factor& x : f) {
        const double c = x.k / (4.0 * x.r * x.r);
        s += x.k * c * c;
    }
    return s;
}

// e = -|H.h|^2 + 7|H|^4
inline double density(const std::vector<Factor>& f) { return -A2(f) + 7.0 * H2(f) * H2(f); }

// W = -W2 + 7 W3 as coefficients on nu_i; W1, Lap_n terms and the grad-of-constant pieces vanish,
// and pi_n grad_i grad_j((H.h^ij) H) = sum_i c_i a_i (-k_i / r_i^2) nu_i from Lap nu_i = -(k_i/r_i^2) nu_i.
inline std::vector<double> W(const std::vector<Factor>& f)
{
    const double h2 = H2(f), a2 = A2(f);
    std::vector<double> w;
    for (const Factor& x : f) {
        const double c = x.k / (4.0 * x.r * x.r), a = -x.k / (4.0 * x.r), r3 = x.r * x.r * x.r;
        const double w2 = -4.0 * c * c * x.k / x.r - 4.0 * a2 * a - 0.5 * c * x.k * x.k / r3 + 2.0 * c * a * (-x.k / (x.r * x.r));
        const double w3 = -h2 * c * x.k / x.r - 4.0 * h2 * h2 * a;
        w.push_back(-w2 + 7.0 * w3);
    }
    return w;
}

// T = 2(nH.nH)h - 4(A A).h - 1/2 (v.h_kl) h^kl - 4|nH|^2 H + 4|A|^2 H - 28|H|^4 H with v = (H.h^ij) h_ij
inline std::vector<double> T(const std::vector<Factor>& f)
{
    const double h2 = H2(f), a2 = A2(f);
    std::vector<double> t;
    for (const Factor& x : f) {
        const double c = x.k / (4.0 * x.r * x.r), a = -x.k / (4.0 * x.r), r3 = x.r * x.r * x.r;
        t.push_back(4.0 * c * c * x.k / x.r + 0.5 * c * x.k * x.k / r3 + 4.0 * a2 * a - 28.0 * h2 * h2 * a);
    }
    return t;
}

inline double norm(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// (c . H) for a field with coefficients c on nu_i
inline double dot_H(const std::vector<Factor>& f, const std::vector<double>& c)
{
    double s = 0.0;
    for (size_t i = 0; i < f.size(); ++i) s += c[i] * (-f[i].k / (4.0 * f[i].r));
    return s;
}

}  // namespace oracle
