#include "w4/variation.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace w4;

namespace {

ShapeSpec torus(std::vector<double> r)
{
    ShapeSpec s;
    s.kind = ShapeKind::torus4;
    s.radii = r;
    return s;
}

Perturbation bump_at(const Grid4& g, std::array<int, 4> ix, double rho)
{
    Perturbation p;
    for (int a = 0; a < 4; ++a) p.center[a] = g.coord(a, ix[a]);
    p.rho = rho;
    return p;
}

}  // namespace

TEST_SUITE("variation_harness")
{
    TEST_CASE("end-corrected weights integrate low-degree polynomials exactly")
    {
        const int n = 15;
        for (int k : {2, 3, 4, 5, 6}) {
            const auto w = end_corrected_weights(n, k);
            for (int deg = 0; deg < k; ++deg) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += w[i] * std::pow(double(i), deg);
                const double exact = std::pow(double(n - 1), deg + 1) / (deg + 1);
                CAPTURE(k);
                CAPTURE(deg);
                CHECK(s == doctest::Approx(exact).epsilon(1e-11));
            }
        }
        const auto w4 = end_corrected_weights(12, 4);
        CHECK(w4[0] == doctest::Approx(0.3486111111).epsilon(1e-9));
        CHECK(w4[1] == doctest::Approx(1.2458333333).epsilon(1e-9));
        CHECK(w4[2] == doctest::Approx(0.8791666667).epsilon(1e-9));
        CHECK(w4[3] == doctest::Approx(1.0263888889).epsilon(1e-9));
        CHECK(w4[11] == w4[0]);
        const auto trap = end_corrected_weights(5, 0);
        CHECK(trap.front() == 0.5);
        CHECK(std::accumulate(trap.begin(), trap.end(), 0.0) == 4.0);
        CHECK_THROWS_AS(end_corrected_weights(7, 4), std::invalid_argument);
        CHECK_THROWS_AS(end_corrected_weights(1, 0), std::invalid_argument);
    }

    TEST_CASE("box weight sums to the box volume")
    {
        const GridPtr g = shape_grid(torus({0.5, 0.5, 0.5, 0.5}), 16, 8);
        Box b;
        b.lo = {2, 3, 4, 5};
        b.hi = {12, 11, 13, 14};
        const FieldD Q = box_weight(g, b, 4);
        double vol = 1.0;
        for (int a = 0; a < 4; ++a) vol *= (b.hi[a] - b.lo[a]) * g->spacing[a];
        CHECK(Q.v.sum() == doctest::Approx(vol).epsilon(1e-12));
        b.hi[2] = 16;
        CHECK_THROWS_AS(box_weight(g, b, 4), std::invalid_argument);
        b.hi[2] = 4;
        CHECK_THROWS_AS(box_weight(g, b, 4), std::invalid_argument);
    }

    TEST_CASE("box weight refuses the boundary margin of a bounded grid")
    {
        ShapeSpec s;
        s.kind = ShapeKind::flat_patch;
        const GridPtr g = shape_grid(s, 16, 8);
        Box b;
        b.lo = {0, 4, 4, 4};
        b.hi = {10, 10, 10, 10};
        CHECK_THROWS_AS(box_weight(g, b, 4), std::invalid_argument);
    }

    TEST_CASE("default eps schedule")
    {
        const GridPtr g = shape_grid(torus({0.5, 0.5, 0.5, 0.5}), 9, 8);
        FieldD B(g, 0, 8);
        B.v.setConstant(0.25);
        const auto e = default_eps(B, 4);
        REQUIRE(e.size() == 4);
        const double bmax = 0.25 * std::sqrt(8.0);  // ambient norm
        CHECK(e[0] == doctest::Approx(1e-2 / bmax));
        CHECK(e[3] == doctest::Approx(1.25e-3 / bmax));
        B.v.setZero();
        CHECK_THROWS_AS(default_eps(B), std::invalid_argument);
        CHECK_THROWS_AS(energy_directional_fd(sample_jet(torus({0.5, 0.5, 0.5, 0.5}), g), B, {1e-3, 5e-4}),
                        std::invalid_argument);
    }

    TEST_CASE("flat patch: both sides of the gradient check vanish")
    {
        ShapeSpec s;
        s.kind = ShapeKind::flat_patch;
        const GridPtr g = shape_grid(s, 16, 8);
        const Jet base = sample_jet(s, g);
        const FieldD B = variation_field(base, bump_at(*g, {8, 8, 8, 8}, 1.0));
        const GradientCheck c = gradient_check(base, B);
        CHECK(c.energy == 0.0);
        CHECK(std::abs(c.delta_w) == 0.0);
        CHECK(std::abs(c.delta_fd) <= 1e-12);
        CHECK(c.pass);
    }

    TEST_CASE("FD derivative is odd and linear in B")
    {
        const ShapeSpec s = torus({0.6, 0.4, 0.5, 0.3});
        const GridPtr g = shape_grid(s, 12, 8);
        const Jet base = sample_jet(s, g);
        Perturbation p = bump_at(*g, {6, 6, 6, 6}, 1.5);
        p.envelope = Envelope::periodic;
        p.along_H = true;
        const FieldD B = variation_field(base, p);
        const auto eps = default_eps(B, 4);
        const double d1 = energy_directional_fd(base, B, eps).value;
        FieldD mB = B;
        mB.v *= -1.0;
        const double dm = energy_directional_fd(base, mB, eps).value;
        FieldD B2 = B;
        B2.v *= 2.0;
        std::vector<double> half;
        for (double e : eps) half.push_back(0.5 * e);
        const double d2 = energy_directional_fd(base, B2, half).value;
        CHECK(std::abs(d1) > 1e-2);
        CHECK(dm == doctest::Approx(-d1).epsilon(1e-10));
        CHECK(d2 == doctest::Approx(2.0 * d1).epsilon(1e-8));
        // the pairing side is exactly linear
        const Geometry geo = build_geometry(base);
        const FieldD W = willmore(geo);
        CHECK(pairing(geo, B2, W) == doctest::Approx(2.0 * pairing(geo, B, W)).epsilon(1e-14));
    }

    TEST_CASE("B supported inside the box: face flux is truncation error and vanishes under refinement")
    {
        const ShapeSpec s = torus({0.6, 0.4, 0.5, 0.3});
        auto flux_at = [&](int n) {
            const GridPtr g = shape_grid(s, n, 8);
            const Jet base = sample_jet(s, g);
            const Geometry geo = build_geometry(base);
            const FieldD B = variation_field(base, bump_at(*g, {n / 2, n / 2, n / 2, n / 2}, 0.9));
            Box b;
            b.lo.fill(n / 8);
            b.hi.fill(n - n / 8);
            const FieldD V = boundary_current(geo, B);
            return std::abs(box_flux(geo, V, b, 4)) / max_norm(V, false);
        };
        const double f16 = flux_at(16), f24 = flux_at(24);
        CHECK(f16 <= 1e-4);
        CHECK(f24 <= 0.1 * f16);
    }

    TEST_CASE("B inside the box with stencil reach inside too: flux is zero")
    {
        // 2nd-order stencils keep every discrete derivative of B three points from its support
        const ShapeSpec s = torus({0.6, 0.4, 0.5, 0.3});
        const GridPtr g = shape_grid(s, 16, 2);
        const Jet base = sample_jet(s, g);
        const Geometry geo = build_geometry(base);
        const FieldD B = variation_field(base, bump_at(*g, {8, 8, 8, 8}, 0.9));
        Box b;
        b.lo.fill(2);
        b.hi.fill(14);
        const FieldD V = boundary_current(geo, B);
        REQUIRE(max_norm(V, false) > 1e-3);
        CHECK(std::abs(box_flux(geo, V, b, 4)) <= 1e-8);
    }

    TEST_CASE("box flux of a current is the box integral of its divergence")
    {
        const ShapeSpec s = torus({0.6, 0.4, 0.5, 0.3});
        const GridPtr g = shape_grid(s, 16, 8);
        const Jet base = sample_jet(s, g);
        const Geometry geo = build_geometry(base);
        Perturbation p = bump_at(*g, {1, 8, 8, 8}, 1.3);
        p.envelope = Envelope::periodic;
        p.along_H = true;
        const FieldD V = boundary_current(geo, variation_field(base, p));
        Box b;
        b.lo = {3, 3, 3, 3};
        b.hi = {12, 12, 12, 12};
        const FieldD Vu = raise_slot(geo, V, 0);
        FieldD div(g, 0, 1);
        for (int a = 0; a < 4; ++a) {
            FieldD f(g, 0, 1);
            for (long q = 0; q < g->size(); ++q) f.v(0, q) = geo.sqrtg.v(0, q) * Vu.v(a, q);
            div.v += partial(f, a).v;
        }
        const double bulk = div.v.cwiseProduct(box_weight(g, b, 4).v).sum();
        const double flux = box_flux(geo, V, b, 4);
        REQUIRE(std::abs(flux) > 1e-4);
        CHECK(bulk == doctest::Approx(flux).epsilon(1e-2));
    }
}
