#pragma once

#include "w4/field.hpp"

#include <optional>
#include <string>
#include <vector>

namespace w4 {

using FieldD = Field<double>;

enum class ShapeKind { flat_patch, sphere4_patch, torus4, s2xs2, s1xs3, s1xs1xs2 };

// compact: cutoff-style bump of radius rho. periodic: prod_a exp((cos(u_a - c_a) - 1) / rho^2), fully periodic grids only.
enum class Envelope { compact, periodic };

struct Perturbation {
    double eps = 0.0;
    std::array<double, 4> center{};
    double rho = 1.0;
    std::vector<double> direction;  // empty: mean-curvature direction at the center (or the last axis if H=0 there)
    Profile profile = Profile::smooth;
    Envelope envelope = Envelope::compact;
    bool along_H = false;  // use the unit mean-curvature field itself as the normal direction
};

struct ShapeSpec {
    ShapeKind kind = ShapeKind::torus4;
    std::vector<double> radii;
    double clamp = 0.7853981633974483;  // pi/4
    double window = 0.7853981633974483; // half-width of the coordinate window on sphere factors
    double scale = 1.0;                 // Phi -> scale * Phi
    std::optional<Perturbation> perturbation;
};

struct Jet {
    FieldD phi;    // rank 0
    FieldD dphi;   // rank 1
    FieldD ddphi;  // rank 2, symmetric
};

struct SphereFactor {
    int dim;
    double radius;
};

std::string kind_name(ShapeKind k);
ShapeKind parse_kind(const std::string& s);
int ambient_dim(ShapeKind k);
std::vector<SphereFactor> factors(const ShapeSpec& s);
void validate(const ShapeSpec& s);
// Factor radii sqrt(k_i / 4) (radius 1 for sphere4, none for flat).
std::vector<double> default_radii(ShapeKind k);

// Grid matching the shape's periodicity: circle axes periodic on [0,2pi), sphere-factor axes windowed.
GridPtr shape_grid(const ShapeSpec& s, int n, int order = 8, EdgeMode edge = EdgeMode::closure);

// Analytic 2-jet of the unperturbed shape.
Jet sample_jet(const ShapeSpec& s, GridPtr g);

// Jet of base + D with D sampled on the grid; derivatives of D by stencils.
Jet displaced_jet(const Jet& base, const FieldD& disp);

struct PerturbedShape {
    Jet jet;
    FieldD B;     // unit-profile variation field b * nu (normal at eps = 0)
    FieldD bump;  // b
};

// sample_jet, or the perturbed jet when the spec carries a perturbation block.
Jet shape_jet(const ShapeSpec& s, GridPtr g);

// B = b nu with nu the normalized normal projection of the direction; jet of Phi + eps B.
PerturbedShape perturb_normal(const ShapeSpec& s, GridPtr g);
FieldD variation_field(const Jet& base, const Perturbation& pert, FieldD* bump = nullptr);

// Normal projector I - dPhi g^-1 dPhi^T per point, stored as m*m rows.
FieldD normal_projector(const Jet& jet);

ShapeSpec parse_shape_text(const std::string& text);
ShapeSpec load_shape_file(const std::string& path);

// Closed-form volume of the full product manifold (product of sphere volumes).
double closed_form_volume(const ShapeSpec& s);
double radii_square_sum(const ShapeSpec& s);

}  // namespace w4
