#include "w4/geometry.hpp"
#include "w4/shapes.hpp"

#include <doctest.h>

#include <cmath>

using namespace w4;

namespace {

ShapeSpec spec(ShapeKind k, std::vector<double> radii = {})
{
    ShapeSpec s;
    s.kind = k;
    s.radii = radii.empty() ? default_radii(k) : radii;
    return s;
}

const std::vector<ShapeKind> kAll = {ShapeKind::flat_patch, ShapeKind::sphere4_patch, ShapeKind::torus4,
                                     ShapeKind::s2xs2, ShapeKind::s1xs3, ShapeKind::s1xs1xs2};

}  // namespace

TEST_SUITE("shape_catalog")
{
    TEST_CASE("kind names round-trip")
    {
        for (ShapeKind k : kAll) CHECK(parse_kind(kind_name(k)) == k);
        CHECK(parse_kind("flat") == ShapeKind::flat_patch);
        CHECK(parse_kind("sphere4") == ShapeKind::sphere4_patch);
        CHECK_THROWS_AS(parse_kind("klein"), std::invalid_argument);
    }

    TEST_CASE("validation")
    {
        CHECK_THROWS_AS(validate(spec(ShapeKind::torus4, {0.5, 0.5, 0.5})), std::invalid_argument);
        CHECK_THROWS_AS(validate(spec(ShapeKind::s2xs2, {0.5, -0.5})), std::invalid_argument);
        CHECK_NOTHROW(validate(spec(ShapeKind::s1xs3)));
    }

    TEST_CASE("default radii put the product on the unit sphere")
    {
        for (ShapeKind k : kAll) {
            if (k == ShapeKind::flat_patch) continue;
            CHECK(radii_square_sum(spec(k)) == doctest::Approx(1.0).epsilon(1e-15));
        }
    }

    TEST_CASE("samples lie on the product of spheres")
    {
        for (ShapeKind k : {ShapeKind::sphere4_patch, ShapeKind::torus4, ShapeKind::s2xs2, ShapeKind::s1xs3, ShapeKind::s1xs1xs2}) {
            const ShapeSpec s = spec(k);
            const GridPtr g = shape_grid(s, 12, 8);
            const Jet j = sample_jet(s, g);
            for (long p = 0; p < g->size(); p += 97) CHECK(j.phi.v.col(p).norm() == doctest::Approx(1.0).epsilon(1e-14));
        }
    }

    TEST_CASE("analytic jet agrees with stencils applied to the samples")
    {
        const ShapeSpec s = spec(ShapeKind::torus4, {0.6, 0.4, 0.5, 0.3});
        const GridPtr g = shape_grid(s, 16, 8);
        const Jet j = sample_jet(s, g);
        const int m = j.phi.m;
        for (int a = 0; a < 4; ++a) {
            const FieldD d = partial(j.phi, a);
            CHECK((d.v - j.dphi.v.middleRows(a * m, m)).cwiseAbs().maxCoeff() < 1e-5);
            for (int b = 0; b < 4; ++b) {
                const FieldD dd = partial(j.dphi, b);
                CHECK((dd.v.middleRows(a * m, m) - j.ddphi.v.middleRows((a * 4 + b) * m, m)).cwiseAbs().maxCoeff() < 1e-5);
                CHECK(j.ddphi.v.middleRows((a * 4 + b) * m, m) == j.ddphi.v.middleRows((b * 4 + a) * m, m));
            }
        }
    }

    TEST_CASE("closed-form volumes")
    {
        CHECK(closed_form_volume(spec(ShapeKind::torus4)) == doctest::Approx(std::pow(M_PI, 4)).epsilon(1e-15));
        // |S^2(r)| = 4 pi r^2
        CHECK(closed_form_volume(spec(ShapeKind::s2xs2, {0.6, 0.8})) ==
              doctest::Approx(16 * M_PI * M_PI * 0.36 * 0.64).epsilon(1e-14));
    }

    TEST_CASE("shape file")
    {
        const ShapeSpec s = parse_shape_text(
            "# comment\nkind = torus4\nradii = 0.6, 0.4, 0.5, 0.3\nscale = 2\n\n[perturbation]\neps = 0.01\n"
            "center = 1, 2, 3, 4\nrho = 1.5\ndirection = H\nenvelope = periodic\nprofile = quintic\n");
        CHECK(s.kind == ShapeKind::torus4);
        CHECK(s.radii == std::vector<double>{0.6, 0.4, 0.5, 0.3});
        CHECK(s.scale == 2.0);
        REQUIRE(s.perturbation);
        CHECK(s.perturbation->eps == 0.01);
        CHECK(s.perturbation->center == std::array<double, 4>{1, 2, 3, 4});
        CHECK(s.perturbation->along_H);
        CHECK(s.perturbation->envelope == Envelope::periodic);
        CHECK(s.perturbation->profile == Profile::quintic);
        CHECK_THROWS_AS(parse_shape_text("kind = torus4\ncolour = red\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_shape_text("kind = torus4\nradii 0.5\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_shape_text("kind = torus4\n[perturbation]\nenvelope = square\n"), std::invalid_argument);
        CHECK_THROWS_AS(load_shape_file("/nonexistent/shape.txt"), std::invalid_argument);
    }

    TEST_CASE("variation field")
    {
        const ShapeSpec s = spec(ShapeKind::torus4, {0.6, 0.4, 0.5, 0.3});
        const GridPtr g = shape_grid(s, 12, 8);
        const Jet base = sample_jet(s, g);
        const Geometry geo = build_geometry(base);
        Perturbation p;
        p.center = {M_PI, M_PI, M_PI, M_PI};
        p.rho = 1.5;
        FieldD bump;
        const FieldD B = variation_field(base, p, &bump);
        SUBCASE("normal and compactly supported")
        {
            CHECK(max_tangential(geo, B) <= 1e-13 * max_norm(B, false));
            for (long q = 0; q < g->size(); ++q)
                if (bump.v(0, q) == 0.0) CHECK(B.v.col(q).norm() == 0.0);
            CHECK(max_norm(B, false) == doctest::Approx(1.0).epsilon(1e-12));
        }
        SUBCASE("along H with a periodic envelope")
        {
            p.along_H = true;
            p.envelope = Envelope::periodic;
            const FieldD Bh = variation_field(base, p);
            for (long q = 0; q < g->size(); q += 53) {
                const double hn = geo.H.v.col(q).norm();
                CHECK(std::abs(Bh.v.col(q).dot(geo.H.v.col(q))) == doctest::Approx(Bh.v.col(q).norm() * hn).epsilon(1e-12));
            }
        }
        SUBCASE("periodic envelope needs a periodic grid")
        {
            const ShapeSpec sp = spec(ShapeKind::sphere4_patch);
            const GridPtr gs = shape_grid(sp, 12, 8);
            p.envelope = Envelope::periodic;
            CHECK_THROWS(variation_field(sample_jet(sp, gs), p));
        }
    }

    TEST_CASE("zero displacements leave the jet bitwise unchanged")
    {
        ShapeSpec s = spec(ShapeKind::torus4);
        const GridPtr g = shape_grid(s, 12, 8);
        const Jet base = sample_jet(s, g);
        const Jet d = displaced_jet(base, FieldD(g, 0, base.phi.m));
        CHECK(d.phi.v == base.phi.v);
        CHECK(d.dphi.v == base.dphi.v);
        CHECK(d.ddphi.v == base.ddphi.v);
        Perturbation p;
        p.eps = 0.0;
        p.center = {1, 1, 1, 1};
        s.perturbation = p;
        CHECK(shape_jet(s, g).ddphi.v == base.ddphi.v);
    }
}
