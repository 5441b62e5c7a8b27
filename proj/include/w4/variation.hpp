#pragma once

#include "w4/willmore.hpp"

#include <array>
#include <string>
#include <vector>

namespace w4 {

// Axis-aligned coordinate box given by inclusive grid-index ranges.
struct Box {
    std::array<int, 4> lo{};
    std::array<int, 4> hi{};
};

// Composite trapezoid weights on n nodes (unit spacing) with k corrected end nodes on each side.
// k = 0 is the plain trapezoid; the rule is exact for polynomials of degree < max(k, 2).
std::vector<double> end_corrected_weights(int n, int k);

// Scalar weight field whose integral against sqrt(det g) approximates the box integral.
FieldD box_weight(GridPtr g, const Box& box, int k);

struct FdResult {
    std::vector<double> eps;
    std::vector<double> diffs;   // central differences per eps
    std::vector<double> energies_plus, energies_minus;
    double value = 0.0;          // Richardson-extrapolated derivative
    double observed_order = 0.0; // of the raw differences over the three finest eps
    double min_det = 0.0;
    int shrinks = 0;             // eps halvings forced by a degenerate perturbation
};

// Default schedule 1e-2 * 2^-k / |B|_inf for k = 0..count-1.
std::vector<double> default_eps(const FieldD& B, int count = 6);

// d/de of sum(e * sqrt g * Q) at Phi + e B, by central differences and Richardson over the three finest eps.
// Q == nullptr uses the grid's own quadrature weights.
FdResult energy_directional_fd(const Jet& base, const FieldD& B, std::vector<double> eps, const FieldD* Q = nullptr);

// Integral of B.W over the grid (Q == nullptr) or against a quadrature weight field.
double pairing(const Geometry& geo, const FieldD& B, const FieldD& W, const FieldD* Q = nullptr);

// Flux sum_a [ int_hi sqrt(g) V^a - int_lo sqrt(g) V^a ] of a covariant current through the box faces.
double box_flux(const Geometry& geo, const FieldD& V, const Box& box, int k);

struct GradientCheck {
    double energy = 0.0;
    double delta_fd = 0.0;
    double delta_w = 0.0;
    double tolerance = 0.0;
    double abs_error = 0.0;
    bool pass = false;
    FdResult fd;
};

GradientCheck gradient_check(const Jet& base, const FieldD& B, int eps_count = 6);

struct FluxCheck {
    double delta_fd = 0.0;  // FD derivative of the box energy
    double bulk = 0.0;      // box integral of B.W
    double flux = 0.0;      // face flux of V
    double rel_error = 0.0;
    double tolerance = 1e-2;
    bool pass = false;
    FdResult fd;
};

FluxCheck subdomain_flux_check(const Jet& base, const FieldD& B, const Box& box, int k, int eps_count = 6);

}  // namespace w4
