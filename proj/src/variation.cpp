#include "w4/variation.hpp"

#include "pointwise.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace w4 {

namespace {

double bernoulli(int n)
{
    static const double b[] = {1.0, -0.5, 1.0 / 6, 0.0, -1.0 / 30, 0.0, 1.0 / 42, 0.0, -1.0 / 30, 0.0, 5.0 / 66, 0.0, -691.0 / 2730};
    return b[n];
}

double quad_sum(const FieldD& f, const FieldD& sqrtg, const FieldD* Q)
{
    if (!Q) return integrate(f, sqrtg);
    std::vector<double> t(f.points());
    for (long p = 0; p < f.points(); ++p) t[p] = f.v(0, p) * sqrtg.v(0, p) * Q->v(0, p);
    return pairwise_sum(t);
}

double energy_at(const Jet& base, const FieldD& B, double e, const FieldD* Q, double* min_det)
{
    FieldD D = B;
    D.v *= e;
    Geometry geo = build_geometry(displaced_jet(base, D));
    if (min_det) *min_det = std::min(*min_det, geo.min_det);
    return quad_sum(energy_density(geo), geo.sqrtg, Q);
}

}  // namespace

std::vector<double> end_corrected_weights(int n, int k)
{
    if (n < 2) throw std::invalid_argument("quadrature needs at least two nodes");
    std::vector<double> w(n, 1.0);
    if (k <= 1 || 2 * k > n) {
        w.front() = w.back() = 0.5;
        if (k > 1) throw std::invalid_argument("too few nodes for the requested end correction");
        return w;
    }
    // Euler-Maclaurin: corrections c_i on nodes 0..k-1 reproduce sum f(i) - int f for degree < k
    Eigen::MatrixXd V(k, k);
    Eigen::VectorXd rhs(k);
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) V(j, i) = std::pow(double(i), j);
        if (j == 0) rhs(j) = -0.5;
        else if (j % 2 == 1) rhs(j) = bernoulli(j + 1) / (j + 1);
        else rhs(j) = 0.0;
    }
    const Eigen::VectorXd c = V.fullPivLu().solve(rhs);
    for (int i = 0; i < k; ++i) {
        w[i] += c(i);
        w[n - 1 - i] += c(i);
    }
    return w;
}

FieldD box_weight(GridPtr g, const Box& box, int k)
{
    std::array<std::vector<double>, 4> w;
    for (int a = 0; a < 4; ++a) {
        if (box.lo[a] < 0 || box.hi[a] >= g->dims[a] || box.hi[a] <= box.lo[a])
            throw std::invalid_argument("box outside the grid on axis " + std::to_string(a));
        if (!g->periodic[a] && (box.lo[a] < g->margin || box.hi[a] > g->dims[a] - 1 - g->margin))
            throw std::invalid_argument("box touches the boundary margin on axis " + std::to_string(a));
        w[a] = end_corrected_weights(box.hi[a] - box.lo[a] + 1, k);
    }
    FieldD Q(g, 0, 1);
    for (long p = 0; p < g->size(); ++p) {
        const auto ix = g->index(p);
        double s = 1.0;
        for (int a = 0; a < 4; ++a)
            s *= (ix[a] < box.lo[a] || ix[a] > box.hi[a]) ? 0.0 : w[a][ix[a] - box.lo[a]] * g->spacing[a];
        Q.v(0, p) = s;
    }
    return Q;
}

std::vector<double> default_eps(const FieldD& B, int count)
{
    const double bmax = max_norm(B, false);
    if (!(bmax > 0.0)) throw std::invalid_argument("variation field is zero");
    std::vector<double> e;
    for (int k = 0; k < count; ++k) e.push_back(1e-2 * std::ldexp(1.0, -k) / bmax);
    return e;
}

FdResult energy_directional_fd(const Jet& base, const FieldD& B, std::vector<double> eps, const FieldD* Q)
{
    if (eps.size() < 3) throw std::invalid_argument("eps schedule needs at least three values");
    FdResult r;
    for (int attempt = 0;; ++attempt) {
        try {
            r.min_det = std::numeric_limits<double>::infinity();
            r.diffs.clear();
            r.energies_plus.clear();
            r.energies_minus.clear();
            for (double e : eps) {
                const double ep = energy_at(base, B, e, Q, &r.min_det);
                const double em = energy_at(base, B, -e, Q, &r.min_det);
                r.energies_plus.push_back(ep);
                r.energies_minus.push_back(em);
                r.diffs.push_back((ep - em) / (2.0 * e));
            }
            break;
        } catch (const std::runtime_error&) {
            if (attempt >= 5) throw;
            for (double& e : eps) e *= 0.5;
            ++r.shrinks;
        }
    }
    r.eps = eps;
    const size_t n = eps.size();
    const double D1 = r.diffs[n - 3], D2 = r.diffs[n - 2], D3 = r.diffs[n - 1];
    const double q = eps[n - 2] / eps[n - 1];
    const double q2 = q * q, q4 = q2 * q2;
    const double Ra = (q2 * D2 - D1) / (q2 - 1.0);
    const double Rb = (q2 * D3 - D2) / (q2 - 1.0);
    r.value = (q4 * Rb - Ra) / (q4 - 1.0);
    const double a = std::abs(D1 - D2), b = std::abs(D2 - D3);
    r.observed_order = (a > 0.0 && b > 0.0) ? std::log(a / b) / std::log(eps[n - 3] / eps[n - 2]) : 0.0;
    return r;
}

double pairing(const Geometry& geo, const FieldD& B, const FieldD& W, const FieldD* Q)
{
    const FieldD bw = pw::pointwise(geo.grid, 0, 1, [&](long p, double* o) { o[0] = pw::dot(B.col(p), W.col(p), geo.m); });
    return quad_sum(bw, geo.sqrtg, Q);
}

double box_flux(const Geometry& geo, const FieldD& V, const Box& box, int k)
{
    const Grid4& g = *geo.grid;
    const FieldD Vu = raise_slot(geo, V, 0);
    std::array<std::vector<double>, 4> w;
    for (int a = 0; a < 4; ++a) w[a] = end_corrected_weights(box.hi[a] - box.lo[a] + 1, k);
    double total = 0.0;
    for (int a = 0; a < 4; ++a) {
        for (int side = 0; side < 2; ++side) {
            const int fix = side ? box.hi[a] : box.lo[a];
            std::vector<double> t;
            std::array<int, 4> ix{};
            ix[a] = fix;
            std::array<int, 3> ax{};
            for (int b = 0, c = 0; b < 4; ++b)
                if (b != a) ax[c++] = b;
            for (int i = box.lo[ax[0]]; i <= box.hi[ax[0]]; ++i)
                for (int j = box.lo[ax[1]]; j <= box.hi[ax[1]]; ++j)
                    for (int l = box.lo[ax[2]]; l <= box.hi[ax[2]]; ++l) {
                        ix[ax[0]] = i;
                        ix[ax[1]] = j;
                        ix[ax[2]] = l;
                        const long p = g.point(ix);
                        const double wt = w[ax[0]][i - box.lo[ax[0]]] * g.spacing[ax[0]] *
                                          w[ax[1]][j - box.lo[ax[1]]] * g.spacing[ax[1]] *
                                          w[ax[2]][l - box.lo[ax[2]]] * g.spacing[ax[2]];
                        t.push_back(wt * geo.sqrtg.v(0, p) * Vu.v(a, p));
                    }
            const double s = pairwise_sum(t);
            total += side ? s : -s;
        }
    }
    return total;
}

GradientCheck gradient_check(const Jet& base, const FieldD& B, int eps_count)
{
    GradientCheck c;
    const Geometry geo = build_geometry(base);
    c.energy = total_energy(geo);
    c.delta_w = pairing(geo, B, willmore(geo));
    c.fd = energy_directional_fd(base, B, default_eps(B, eps_count));
    c.delta_fd = c.fd.value;
    c.abs_error = std::abs(c.delta_fd - c.delta_w);
    c.tolerance = std::max(1e-3 * std::abs(c.delta_fd), 1e-7 * std::abs(c.energy));
    c.pass = c.abs_error <= c.tolerance;
    return c;
}

FluxCheck subdomain_flux_check(const Jet& base, const FieldD& B, const Box& box, int k, int eps_count)
{
    FluxCheck c;
    const Geometry geo = build_geometry(base);
    const FieldD Q = box_weight(geo.grid, box, k);
    c.bulk = pairing(geo, B, willmore(geo), &Q);
    c.flux = box_flux(geo, boundary_current(geo, B), box, k);
    c.fd = energy_directional_fd(base, B, default_eps(B, eps_count), &Q);
    c.delta_fd = c.fd.value;
    const double rhs = c.bulk + c.flux;
    double scale = std::abs(c.delta_fd);
    if (scale == 0.0) scale = std::max(std::abs(c.bulk), std::abs(c.flux));
    c.rel_error = scale > 0.0 ? std::abs(c.delta_fd - rhs) / scale : 0.0;
    c.pass = c.rel_error <= c.tolerance;
    return c;
}

}  // namespace w4
