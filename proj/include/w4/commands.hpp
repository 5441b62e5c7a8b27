#pragma once

#include "w4/flow.hpp"
#include "w4/identities.hpp"
#include "w4/report.hpp"
#include "w4/variation.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace w4 {

struct Options {
    ShapeSpec shape;
    int grid = 16;
    bool grid_given = false;
    int fd_order = 8;
    std::optional<std::array<double, 4>> gamma_center;
    std::optional<double> gamma_rho;
    double p = 4.0;
    std::optional<std::uint64_t> seed;
    std::string manifest;
    // variation field B for gradcheck / flux
    std::optional<std::array<double, 4>> bump_center;
    std::optional<double> bump_rho;
    std::optional<int> box_lo, box_hi;
    int eps_count = 6;
    int end_correction = 4;
    // flow
    int steps = 10;
    double dt = -1.0;
    double cfl = 1e-4;
    std::string csv;
    // residual / convergence
    std::optional<double> tol;
    std::vector<double> ratios;  // s2xs2 radius ratios r1/r2 at r1^2 + r2^2 = 1
    std::vector<int> grids;      // convergence resolutions
    std::optional<double> min_order;
    int threads = 0;  // 0: OpenMP default
};

// Each command returns one report per check; the document passes iff all of them do.
std::vector<CheckReport> cmd_energy(const Options& o);
std::vector<CheckReport> cmd_residual(const Options& o);
std::vector<CheckReport> cmd_gradcheck(const Options& o);
std::vector<CheckReport> cmd_flux(const Options& o);
std::vector<CheckReport> cmd_identities(const Options& o);
std::vector<CheckReport> cmd_flow(const Options& o);
std::vector<CheckReport> cmd_convergence(const Options& o);

std::vector<CheckReport> run_command(const std::string& name, const Options& o);

// Variation field used by gradcheck/flux: the shape's perturbation block if present, defaults otherwise.
Perturbation variation_spec(const Options& o, const Grid4& g, bool flux);

// Options echo shared by every report.
Json options_json(const Options& o);

}  // namespace w4
