#include "w4/identities.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace w4;

namespace {

IdentityCase make_case(IdentityId id, const std::string& shape, std::vector<int> grids, double tol,
                       const std::string& cutoff = "-")
{
    const std::string gamma = is_integral(id) ? cutoff : "-";
    const std::string row = identity_name(id) + " " + shape + " " + std::to_string(grids[0]) + "/" +
                            std::to_string(grids[1]) + " " + gamma + " 4 " + std::to_string(tol);
    const auto cs = parse_manifest(row);
    REQUIRE(cs.size() == 1);
    return cs[0];
}

}  // namespace

TEST_SUITE("identity_suite")
{
    TEST_CASE("identity names round-trip")
    {
        for (IdentityId id : all_identities()) CHECK(parse_identity(identity_name(id)) == id);
        CHECK(all_identities().size() == 10);
        CHECK(is_integral(IdentityId::lemma_A2));
        CHECK_FALSE(is_integral(IdentityId::simon));
        CHECK_THROWS_AS(parse_identity("gauss"), std::invalid_argument);
    }

    TEST_CASE("manifest parsing")
    {
        const auto cs = parse_manifest(
            "# comment\n"
            "\n"
            "simon sphere4 12/16 - 4 1e-4\n"
            "lemma_A1 torus4:0.6,0.4,0.5,0.3 16/24 1,2,3,4:1.8 6 1e-3  # trailing\n"
            "codazzi torus4 12 - 4 1e-4\n");
        REQUIRE(cs.size() == 3);
        CHECK(cs[0].id == IdentityId::simon);
        CHECK(cs[0].shape.kind == ShapeKind::sphere4_patch);
        CHECK(cs[0].shape.radii == std::vector<double>{1.0});
        CHECK(cs[0].grids == std::vector<int>{12, 16});
        CHECK_FALSE(cs[0].gamma.has_value());
        CHECK(cs[1].p == 6.0);
        CHECK(cs[1].tol == 1e-3);
        REQUIRE(cs[1].gamma.has_value());
        CHECK(cs[1].gamma->center[3] == 4.0);
        CHECK(cs[1].gamma->rho == 1.8);
        CHECK(cs[1].shape.radii[1] == 0.4);
        CHECK(cs[2].shape.radii == default_radii(ShapeKind::torus4));
        CHECK(cs[2].grids.size() == 1);
    }

    TEST_CASE("manifest errors name the line")
    {
        auto message = [](const std::string& text) {
            try {
                parse_manifest(text);
            } catch (const std::invalid_argument& e) {
                return std::string(e.what());
            }
            return std::string();
        };
        CHECK(message("simon sphere4 12/16 - 4\n").rfind("manifest line 1: ", 0) == 0);
        CHECK(message("# x\nsimon sphere4 12/16 - 4 1e-4\nfoo sphere4 12 - 4 1\n").rfind("manifest line 3: ", 0) == 0);
        CHECK_FALSE(message("lemma_A1 torus4 16/24 - 4 1e-3\n").empty());
        CHECK_FALSE(message("lemma_A1 torus4 16/24 1,2,3:1 4 1e-3\n").empty());
        CHECK_FALSE(message("lemma_A1 torus4 16/24 1,2,3,4 4 1e-3\n").empty());
        CHECK_FALSE(message("simon cube 12/16 - 4 1e-4\n").empty());
        CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.txt"), std::invalid_argument);
    }

    TEST_CASE("file: shapes resolve relative to the manifest")
    {
        const auto dir = std::filesystem::temp_directory_path() / "w4_manifest_test";
        std::filesystem::create_directories(dir);
        std::filesystem::copy_file(std::string(W4_DATA_DIR) + "/perturbed_torus.shape", dir / "t.shape",
                                   std::filesystem::copy_options::overwrite_existing);
        std::ofstream(dir / "m.txt") << "codazzi file:t.shape 12/16 - 4 1e-4\n";
        const auto cs = load_manifest((dir / "m.txt").string());
        REQUIRE(cs.size() == 1);
        CHECK(cs[0].shape.perturbation.has_value());
        CHECK(cs[0].shape.perturbation->eps == 0.05);
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("flat patch: every identity holds to rounding")
    {
        IdentityRunner run;
        for (IdentityId id : all_identities()) {
            const IdentityResult r = run.run(make_case(id, "flat", {16, 24}, 1e-4, "3.14,3.14,3.14,3.14:1.4"));
            CAPTURE(identity_name(id));
            CHECK(r.residuals.back() <= 1e-10);
            CHECK(r.pass);
        }
    }

    TEST_CASE("sphere: Simon identity converges")
    {
        IdentityRunner run;
        const IdentityResult r = run.run(make_case(IdentityId::simon, "sphere4", {12, 16}, 1e-4));
        CHECK(r.residuals[1] < r.residuals[0]);
        CHECK(r.residuals[1] <= 1e-4 * r.scales[1]);
        CHECK(r.order >= 2.0);
        CHECK(r.pass);
    }

    TEST_CASE("T as written misses 7|H|^2|A|^2; the corrected balance closes")
    {
        IdentityRunner run;
        const IdentityResult r = run.run(make_case(IdentityId::prop_32, "sphere4", {12, 16}, 1e-3, "1.5708,1.5708,1.5708,3.1416:0.3"));
        REQUIRE(r.literal_residuals.size() == 2);
        CHECK(r.literal_residuals[1] >= 0.1 * r.scales[1]);
        CHECK(r.residuals[1] <= 1e-8 * r.scales[1]);
        bool listed = false;
        for (const auto& [name, v] : r.summands) listed |= name.find("+7 |H|^2 |A|^2") == 0;
        CHECK(listed);
    }

    TEST_CASE("perturbed torus: pointwise identities converge at high order")
    {
        IdentityRunner run;
        const std::string shape = "file:" + std::string(W4_DATA_DIR) + "/perturbed_torus.shape";
        for (IdentityId id : {IdentityId::codazzi, IdentityId::tracefree_div, IdentityId::laplacian_split}) {
            const IdentityResult r = run.run(make_case(id, shape, {12, 16}, 1e-3));
            CAPTURE(identity_name(id));
            CHECK_FALSE(r.at_floor);
            CHECK(r.residuals[1] < r.residuals[0]);
            CHECK(r.order >= 3.0);
        }
    }

    TEST_CASE("integral identities: p and cutoff variants on a product torus")
    {
        IdentityRunner run;
        for (IdentityId id : {IdentityId::lemma_A1, IdentityId::lemma_A2, IdentityId::lemma_A3, IdentityId::prop_32})
            for (const char* row : {" torus4:0.6,0.4,0.5,0.3 12/16 1,2,3,4:1.8 4 1e-3", " torus4:0.6,0.4,0.5,0.3 12/16 3.1,3.1,3.1,3.1:2.5 6 1e-3"}) {
                const auto cs = parse_manifest(identity_name(id) + row);
                const IdentityResult r = run.run(cs[0]);
                CAPTURE(identity_name(id));
                CAPTURE(row);
                CHECK(r.scales[1] > 0.0);
                CHECK(r.residuals[1] <= std::max(1e-6 * r.scales[1], 1e-12));
                CHECK(r.pass);
            }
    }

    TEST_CASE("integral fields: residual is independent of an overall scale")
    {
        for (double lam : {0.5, 2.0}) {
            ShapeSpec s;
            s.kind = ShapeKind::torus4;
            s.radii = {0.6, 0.4, 0.5, 0.3};
            const GridPtr g = shape_grid(s, 12, 8);
            const IntegralResidual base = IntegralFields(build_geometry(sample_jet(s, g))).evaluate(
                IdentityId::lemma_A2, cutoff_field(g, {1, 2, 3, 4}, 1.8, 4.0));
            s.scale = lam;
            const IntegralResidual scaled = IntegralFields(build_geometry(sample_jet(s, g))).evaluate(
                IdentityId::lemma_A2, cutoff_field(g, {1, 2, 3, 4}, 1.8, 4.0));
            // every summand has weight -2 in length
            CHECK(scaled.lhs == doctest::Approx(base.lhs / (lam * lam)).epsilon(1e-10));
            CHECK(scaled.rhs == doctest::Approx(base.rhs / (lam * lam)).epsilon(1e-10));
        }
    }

    TEST_CASE("single-resolution cases report no order")
    {
        IdentityRunner run;
        const auto cs = parse_manifest("codazzi torus4 12 - 4 1e-4\n");
        const IdentityResult r = run.run(cs[0]);
        CHECK(r.residuals.size() == 1);
        CHECK(r.pass);
    }

    TEST_CASE("Michael-Simon ratio is scale invariant and finite")
    {
        ShapeSpec s;
        s.kind = ShapeKind::torus4;
        s.radii = {0.6, 0.4, 0.5, 0.3};
        const GridPtr g = shape_grid(s, 12, 8);
        FieldD u(g, 0, 1);
        for (long p = 0; p < g->size(); ++p) u.v(0, p) = 1.5 + std::cos(g->coord(0, g->index(p)[0]));
        const double r1 = sobolev_ratio(build_geometry(sample_jet(s, g)), u);
        s.scale = 3.0;
        const double r3 = sobolev_ratio(build_geometry(sample_jet(s, g)), u);
        CHECK(r1 > 0.0);
        CHECK(std::isfinite(r1));
        CHECK(r3 == doctest::Approx(r1).epsilon(1e-10));
    }
}
