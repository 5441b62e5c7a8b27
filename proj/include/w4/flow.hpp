#pragma once

#include "w4/willmore.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace w4 {

// Explicit Euler descent Phi <- Phi - dt W. The state is the base jet plus an accumulated displacement.
struct FlowState {
    Jet base;
    FieldD disp;  // rank 0, R^m
};

FlowState initial_state(const ShapeSpec& s, GridPtr g);

struct StepResult {
    FieldD disp;                 // displacement after the step
    double energy_before = 0.0;
    double energy_after = 0.0;
    double residual_linf = 0.0;  // |W|_inf at the start of the step
    double min_det_after = 0.0;
    double tangential_ratio = 0.0;  // |P_tan (Phi_new - Phi)|_inf / |Phi_new - Phi|_inf
};

// Throws std::runtime_error when the stepped immersion degenerates.
StepResult flow_step(const FlowState& st, double dt);

// Smallest physical grid spacing min_a sqrt(g_aa) h_a over the interior.
double min_physical_spacing(const Geometry& geo);

struct FlowConfig {
    int steps = 10;
    int cap = 50;
    double cfl = 1e-4;      // dt = cfl * s^6 with s the smallest physical spacing
    double dt = -1.0;       // fixed dt when >= 0
    int max_halvings = 5;
    double rounding = 1e-13;  // relative energy increase accepted as rounding
};

struct FlowRow {
    int step = 0;
    double energy = 0.0;
    double residual_linf = 0.0;
    double min_det_g = 0.0;
    double dt = 0.0;
};

struct FlowResult {
    std::vector<FlowRow> trace;
    int accepted = 0;
    int halvings = 0;
    bool stiffness_limit = false;
    bool degenerate = false;
    bool monotone = true;
    double max_tangential_ratio = 0.0;
    std::string message;
    FlowState final_state;
};

FlowResult run_flow(const ShapeSpec& s, GridPtr g, const FlowConfig& cfg);

void write_flow_csv(std::ostream& out, const std::vector<FlowRow>& trace);

}  // namespace w4
