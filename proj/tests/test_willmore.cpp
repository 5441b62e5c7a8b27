#include "oracles.hpp"
#include "w4/willmore.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace w4;

namespace {

ShapeSpec spec(ShapeKind k, std::vector<double> radii, double scale = 1.0)
{
    ShapeSpec s;
    s.kind = k;
    s.radii = radii;
    s.scale = scale;
    return s;
}

Geometry geometry(const ShapeSpec& s, int n) { return build_geometry(sample_jet(s, shape_grid(s, n, 8))); }

// Signed contribution of each summand to W in units of H, by hand from h = -(1/r) g nu.
const std::map<std::string, double> kLedger = {
    {"W2: +4 (H.h_ij)(H.h^i_k) h^jk", -16.0},  {"W2: -4 |H.h|^2 H", 16.0},
    {"W2: +1/2 (H.h^ij)(h_kl.h_ij) h^kl", -8.0}, {"W2: +2 pi_n grad_i grad_j((H.h^ij) H)", 8.0},
    {"W3: |H|^2 (H.h_ij) h^ij", 28.0},          {"W3: -4 |H|^4 H", -28.0}};

void check_ledger(const ShapeSpec& s, int n)
{
    const Geometry geo = geometry(s, n);
    const WillmoreFields wf = willmore_terms(geo);
    const ResidualNorms rn = residual_norms(geo, wf);
    REQUIRE(rn.per_term.size() == 14);
    for (const TermStat& t : rn.per_term) {
        const auto it = kLedger.find(t.name);
        const double want = it == kLedger.end() ? 0.0 : it->second;
        CAPTURE(t.name);
        CHECK(t.coef_in_H == doctest::Approx(want).epsilon(1e-4).scale(1.0));
        CHECK(t.coef_spread <= 1e-4 * std::max(1.0, std::abs(want)));
    }
}

}  // namespace

TEST_SUITE("willmore_operator")
{
    TEST_CASE("flat patch: every block vanishes exactly")
    {
        const Geometry geo = geometry(spec(ShapeKind::flat_patch, {}), 12);
        const WillmoreFields wf = willmore_terms(geo);
        CHECK(wf.W1.v.cwiseAbs().maxCoeff() == 0.0);
        CHECK(wf.W2.v.cwiseAbs().maxCoeff() == 0.0);
        CHECK(wf.W3.v.cwiseAbs().maxCoeff() == 0.0);
        const AuxTU tu = aux_TU(geo);
        CHECK(tu.T.v.cwiseAbs().maxCoeff() == 0.0);
        CHECK(tu.U.v.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("assembly W = W1 - W2 + 7 W3 and summands add up to their blocks")
    {
        const Geometry geo = geometry(spec(ShapeKind::torus4, {0.6, 0.4, 0.5, 0.3}), 12);
        const WillmoreFields wf = willmore_terms(geo);
        CHECK((wf.W.v - (wf.W1.v - wf.W2.v + 7.0 * wf.W3.v)).cwiseAbs().maxCoeff() <= 1e-12);
        FieldD sum(geo.grid, 0, geo.m);
        for (const Summand& t : wf.terms) sum.v += t.sign * t.value.v;
        CHECK((sum.v - wf.W.v).cwiseAbs().maxCoeff() <= 1e-12 * max_norm(wf.W2, false));
    }

    TEST_CASE("W is normal-valued")
    {
        const Geometry geo = geometry(spec(ShapeKind::torus4, {0.6, 0.4, 0.5, 0.3}), 12);
        const FieldD W = willmore(geo);
        CHECK(max_tangential(geo, W) <= 1e-12 * max_norm(W, false));
    }

    TEST_CASE("term ledger on the unit sphere") { check_ledger(spec(ShapeKind::sphere4_patch, {1.0}), 16); }
    TEST_CASE("term ledger on torus4 (1/2,...)") { check_ledger(spec(ShapeKind::torus4, {0.5, 0.5, 0.5, 0.5}), 16); }

    TEST_CASE("W on unequal S2 x S2 matches the closed form")
    {
        const ShapeSpec s = spec(ShapeKind::s2xs2, {0.6, 0.8});
        const std::vector<oracle::Factor> f = {{2, 0.6}, {2, 0.8}};
        const Geometry geo = geometry(s, 16);
        const FieldD W = willmore(geo);
        const double wn = oracle::norm(oracle::W(f)), wh = oracle::dot_H(f, oracle::W(f));
        REQUIRE(wn > 0.1);
        for (long p = 0; p < W.points(); ++p) {
            if (!geo.grid->interior(p)) continue;
            CHECK(W.v.col(p).norm() == doctest::Approx(wn).epsilon(1e-5));
            CHECK(W.v.col(p).dot(geo.H.v.col(p)) == doctest::Approx(wh).epsilon(1e-5).scale(wn));
        }
    }

    TEST_CASE("T matches the closed form; U vanishes on product tori")
    {
        for (const auto& [s, f] : std::vector<std::pair<ShapeSpec, std::vector<oracle::Factor>>>{
                 {spec(ShapeKind::sphere4_patch, {1.0}), {{4, 1.0}}},
                 {spec(ShapeKind::torus4, {0.5, 0.5, 0.5, 0.5}), std::vector<oracle::Factor>(4, {1, 0.5})},
                 {spec(ShapeKind::torus4, {0.6, 0.4, 0.5, 0.3}), {{1, 0.6}, {1, 0.4}, {1, 0.5}, {1, 0.3}}}}) {
            const Geometry geo = geometry(s, 12);
            const AuxTU tu = aux_TU(geo);
            const double tn = oracle::norm(oracle::T(f)), th = oracle::dot_H(f, oracle::T(f));
            for (long p = 0; p < geo.grid->size(); p += 13) {
                if (!geo.grid->interior(p)) continue;
                CHECK(tu.T.v.col(p).norm() == doctest::Approx(tn).epsilon(1e-6));
                CHECK(tu.T.v.col(p).dot(geo.H.v.col(p)) == doctest::Approx(th).epsilon(1e-6));
            }
            if (s.kind == ShapeKind::torus4) CHECK(max_norm(tu.U) <= 1e-10);
        }
        // the unit-sphere value in units of H
        CHECK(oracle::dot_H({{4, 1.0}}, oracle::T({{4, 1.0}})) == doctest::Approx(-36.0));
    }

    TEST_CASE("boundary current")
    {
        const ShapeSpec s = spec(ShapeKind::torus4, {0.6, 0.4, 0.5, 0.3});
        const GridPtr g = shape_grid(s, 12, 8);
        const Jet base = sample_jet(s, g);
        const Geometry geo = build_geometry(base);
        SUBCASE("B = 0 gives V = 0")
        {
            CHECK(boundary_current(geo, FieldD(g, 0, geo.m)).v.cwiseAbs().maxCoeff() == 0.0);
        }
        SUBCASE("flat patch gives V = 0 for any B")
        {
            const ShapeSpec fs = spec(ShapeKind::flat_patch, {});
            const GridPtr fg = shape_grid(fs, 16, 8);
            const Jet fb = sample_jet(fs, fg);
            Perturbation p;
            for (int a = 0; a < 4; ++a) p.center[a] = fg->coord(a, 8);
            p.rho = 1.4;
            CHECK(boundary_current(build_geometry(fb), variation_field(fb, p)).v.cwiseAbs().maxCoeff() == 0.0);
        }
        SUBCASE("discrete divergence theorem on the closed torus")
        {
            Perturbation p;
            p.center = {M_PI, M_PI, M_PI, M_PI};
            p.rho = 1.5;
            const FieldD V = raise_slot(geo, boundary_current(geo, variation_field(base, p)), 0);
            FieldD div(g, 0, 1);
            double vmax = 0.0;
            for (int a = 0; a < 4; ++a) {
                FieldD f(g, 0, 1);
                for (long q = 0; q < g->size(); ++q) {
                    f.v(0, q) = geo.sqrtg.v(0, q) * V.v(a, q);
                    vmax = std::max(vmax, std::abs(V.v(a, q)));
                }
                div.v += partial(f, a).v;
            }
            const double total = integrate(div, constant_field<double>(g, 1.0));
            REQUIRE(vmax > 1e-3);
            CHECK(std::abs(total) <= 1e-8 * vmax);
        }
    }

    TEST_CASE("integral of |W||H| scales like lambda^-2")
    {
        auto measure = [](double lam) {
            const ShapeSpec s = spec(ShapeKind::torus4, {0.6, 0.4, 0.5, 0.3}, lam);
            const GridPtr g = shape_grid(s, 12, 8);
            const Geometry geo = build_geometry(sample_jet(s, g));
            const FieldD W = willmore(geo);
            const CutoffFields cut = cutoff_field(g, {M_PI, M_PI, M_PI, M_PI}, 2.0, 4.0);
            FieldD f(g, 0, 1);
            for (long p = 0; p < g->size(); ++p) f.v(0, p) = W.v.col(p).norm() * geo.H.v.col(p).norm() * cut.gamma_p.v(0, p);
            return integrate(f, geo.sqrtg);
        };
        const double base = measure(1.0);
        CHECK(measure(0.5) == doctest::Approx(4.0 * base).epsilon(1e-6));
        CHECK(measure(2.0) == doctest::Approx(0.25 * base).epsilon(1e-6));
    }

    TEST_CASE("torus4 (1/2,...) residual decreases at high order")
    {
        const ShapeSpec s = spec(ShapeKind::torus4, {0.5, 0.5, 0.5, 0.5});
        const double r12 = max_norm(willmore(geometry(s, 12)));
        const double r16 = max_norm(willmore(geometry(s, 16)));
        CHECK(r16 <= 1e-4);
        CHECK(std::log(r12 / r16) / std::log(16.0 / 12.0) >= 3.0);
    }
}
