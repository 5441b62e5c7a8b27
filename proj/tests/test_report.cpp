#include "w4/commands.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace w4;

namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(W4CHECK_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli_reporting")
{
    TEST_CASE("JSON text: shortest round-trip floats, nulls, insertion order")
    {
        Json j;
        j["zeta"] = 0.1;
        j["alpha"] = std::numeric_limits<double>::quiet_NaN();
        j["list"] = {1.0, 2.5};
        j["inf"] = std::numeric_limits<double>::infinity();
        const std::string t = to_json_text(j);
        CHECK(t == "{\n  \"zeta\": 0.10000000000000001,\n  \"alpha\": null,\n  \"list\": [1, 2.5],\n  \"inf\": null\n}\n");
        CHECK(Json::parse(t)["zeta"].get<double>() == 0.1);
    }

    TEST_CASE("document pass is the conjunction of its reports")
    {
        CheckReport a, b;
        a.name = "a";
        a.pass = true;
        b.name = "b";
        b.pass = false;
        CHECK(report_document("x", {a})["pass"] == true);
        CHECK(report_document("x", {a, b})["pass"] == false);
        const Json d = report_document("x", {a});
        auto it = d.begin();
        CHECK(it.key() == "tool");
        CHECK(d["reports"][0]["name"] == "a");
        for (const char* k : {"config", "grid", "residuals", "orders", "tolerances", "details", "pass", "seconds"})
            CHECK(d["reports"][0].contains(k));
    }

    TEST_CASE("tolerances carry a provenance tag")
    {
        CheckReport r;
        r.tolerances.push_back({"relative", 1e-3, "derived"});
        const Json j = r.to_json();
        CHECK(j["tolerances"][0]["name"] == "relative");
        CHECK(j["tolerances"][0]["value"] == 1e-3);
        CHECK(j["tolerances"][0]["provenance"] == "derived");
    }

    TEST_CASE("energy command on torus4 (1/2,...)")
    {
        Options o;
        o.shape.kind = ShapeKind::torus4;
        o.shape.radii = default_radii(ShapeKind::torus4);
        o.grid = 9;
        const auto reps = cmd_energy(o);
        REQUIRE(reps.size() == 1);
        CHECK(reps[0].pass);
        CHECK(reps[0].residuals["energy"].get<double>() == doctest::Approx(3.0 * std::pow(M_PI, 4)).epsilon(1e-12));
        CHECK(reps[0].config["shape"]["kind"] == "torus4");
        CHECK(reps[0].grid["dims"][0] == 9);
    }

    TEST_CASE("unknown command names throw")
    {
        CHECK_THROWS_AS(run_command("bogus", Options{}), std::invalid_argument);
    }

    TEST_CASE("CLI exit codes")
    {
        const auto out = (std::filesystem::temp_directory_path() / "w4_cli_test.json").string();
        CHECK(run_cli("energy --shape torus4 --grid 9 --out " + out) == 0);
        const Json doc = Json::parse(slurp(out));
        CHECK(doc["tool"] == "w4check");
        CHECK(doc["command"] == "energy");
        CHECK(doc["pass"] == true);
        CHECK(run_cli("residual --shape torus4 --radii 0.6,0.4,0.5,0.3 --grid 9 --tol 1e-3") == 1);
        CHECK(run_cli("residual --no-such-flag") == 2);
        CHECK(run_cli("energy --shape torus4 --radii 0.5,0.5") == 2);
        CHECK(run_cli("energy --shape torus4 --fd-order 5") == 2);
        CHECK(run_cli("flow --shape sphere4 --grid 9") == 2);
        CHECK(run_cli("flow --shape torus4 --grid 9 --steps 51") == 2);
        std::filesystem::remove(out);
    }

    TEST_CASE("identities command emits one report per manifest case")
    {
        const auto dir = std::filesystem::temp_directory_path() / "w4_ids_test";
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "m.txt") << "codazzi torus4 12 - 4 1e-4\nsimon flat 12 - 4 1e-4\n";
        Options o;
        o.manifest = (dir / "m.txt").string();
        const auto reps = cmd_identities(o);
        CHECK(reps.size() == 2);
        for (const auto& r : reps) CHECK(r.pass);
        std::filesystem::remove_all(dir);
    }
}
