// w4check: energy, residual and identity checks for four-dimensional immersions.
#include "w4/commands.hpp"
#include "w4/runtime.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace w4;

namespace {

struct Raw {
    std::string shape = "torus4";
    std::vector<double> radii;
    std::optional<double> clamp, window, scale;
    std::vector<double> gamma_center, bump_center;
    std::string out;
};

void add_common(CLI::App* sub, Options& o, Raw& raw)
{
    sub->add_option("--shape", raw.shape, "shape kind (flat, sphere4, torus4, s2xs2, s1xs3, s1xs1xs2) or shape file");
    sub->add_option("--radii", raw.radii, "factor radii")->delimiter(',');
    sub->add_option("--clamp", raw.clamp, "pole clamp on sphere factors");
    sub->add_option("--window", raw.window, "coordinate half-width on sphere factors");
    sub->add_option("--scale", raw.scale, "uniform scale of the immersion");
    sub->add_option("--grid", o.grid, "points per axis")->check(CLI::Range(8, 256));
    sub->add_option("--fd-order", o.fd_order, "stencil order")->check(CLI::IsMember({2, 4, 6, 8, 10, 12}));
    sub->add_option("--gamma-center", raw.gamma_center, "cutoff centre, 4 parameter coordinates")->delimiter(',')->expected(4);
    sub->add_option("--gamma-rho", o.gamma_rho, "cutoff radius");
    sub->add_option("--p", o.p, "cutoff exponent");
    sub->add_option("--out", raw.out, "JSON report path");
    sub->add_option("--seed", o.seed, "seed for a random variation direction");
    sub->add_option("--threads", o.threads, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
}

ShapeSpec resolve_shape(const Raw& raw)
{
    ShapeSpec s;
    if (std::filesystem::is_regular_file(raw.shape)) {
        s = load_shape_file(raw.shape);
    } else {
        s.kind = parse_kind(raw.shape);
        s.radii = default_radii(s.kind);
    }
    if (!raw.radii.empty()) s.radii = raw.radii;
    if (raw.clamp) s.clamp = *raw.clamp;
    if (raw.window) s.window = *raw.window;
    if (raw.scale) s.scale = *raw.scale;
    validate(s);
    return s;
}

std::array<double, 4> four(const std::vector<double>& v) { return {v[0], v[1], v[2], v[3]}; }

void summarize(const std::string& cmd, const std::vector<CheckReport>& reports)
{
    for (const CheckReport& r : reports) {
        if (cmd == "energy") {
            std::printf("energy = %.12g\n", r.residuals["energy"].get<double>());
            std::printf("sum r^2 = %.12g\n", r.residuals["radii_square_sum"].get<double>());
        }
        std::printf("%-24s %s", r.name.c_str(), r.pass ? "PASS" : "FAIL");
        for (auto it = r.residuals.begin(); it != r.residuals.end(); ++it)
            if (it.value().is_number_float()) std::printf("  %s=%.6g", it.key().c_str(), it.value().get<double>());
        std::printf("\n");
    }
}

}  // namespace

int main(int argc, char** argv)
{
    w4::configure_allocator();
    CLI::App app{"Energy, Euler-Lagrange residual and identity checks for immersed four-manifolds"};
    app.require_subcommand(1, 1);
    Options o;
    Raw raw;
    const std::vector<std::pair<std::string, std::string>> cmds = {
        {"energy", "energy, density range and volume"},
        {"residual", "L-inf/L2 norms of W and the per-term table"},
        {"gradcheck", "finite-difference first variation against the integral of B.W"},
        {"flux", "subdomain first variation against bulk plus boundary flux"},
        {"identities", "run an identity manifest"},
        {"flow", "explicit gradient descent with energy trace"},
        {"convergence", "W residual over several grids"}};
    for (const auto& [name, help] : cmds) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub, o, raw);
        if (name == "identities") sub->add_option("--manifest", o.manifest, "manifest file")->required()->check(CLI::ExistingFile);
        if (name == "gradcheck" || name == "flux") {
            sub->add_option("--bump-center", raw.bump_center, "variation centre")->delimiter(',')->expected(4);
            sub->add_option("--bump-rho", o.bump_rho, "variation radius");
            sub->add_option("--eps-count", o.eps_count, "length of the eps schedule")->check(CLI::Range(3, 12));
        }
        if (name == "flux") {
            sub->add_option("--box-lo", o.box_lo, "first box index on every axis");
            sub->add_option("--box-hi", o.box_hi, "last box index on every axis");
            sub->add_option("--end-correction", o.end_correction, "corrected end nodes of the box quadrature")->check(CLI::Range(0, 8));
        }
        if (name == "flow") {
            sub->add_option("--steps", o.steps, "steps (cap 50)")->check(CLI::NonNegativeNumber);
            sub->add_option("--dt", o.dt, "fixed time step (default cfl * s^6)");
            sub->add_option("--cfl", o.cfl, "time step factor");
            sub->add_option("--csv", o.csv, "energy trace CSV path");
        }
        if (name == "residual") {
            sub->add_option("--tol", o.tol, "pass threshold on |W|_inf");
            sub->add_option("--ratios", o.ratios, "s2xs2 radius ratios r1/r2 at r1^2 + r2^2 = 1")->delimiter(',');
        }
        if (name == "convergence") {
            sub->add_option("--grids", o.grids, "resolutions")->delimiter(',');
            sub->add_option("--min-order", o.min_order, "required order between the last two grids");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    o.grid_given = app.get_subcommands().front()->count("--grid") > 0;
    std::vector<CheckReport> reports;
    try {
        o.shape = resolve_shape(raw);
        if (!raw.gamma_center.empty()) o.gamma_center = four(raw.gamma_center);
        if (!raw.bump_center.empty()) o.bump_center = four(raw.bump_center);
        if (o.threads > 0) omp_set_num_threads(o.threads);
        reports = run_command(cmd, o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    const Json doc = report_document(cmd, reports);
    if (!raw.out.empty()) {
        std::ofstream f(raw.out, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot write " << raw.out << "\n";
            return 2;
        }
        f << to_json_text(doc);
    }
    summarize(cmd, reports);
    return doc["pass"].get<bool>() ? 0 : 1;
}
