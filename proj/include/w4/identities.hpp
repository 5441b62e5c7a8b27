#pragma once

#include "w4/willmore.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace w4 {

enum class IdentityId {
    codazzi,
    tracefree_div,
    laplacian_split,
    simon,
    interchange_H,
    interchange_h,
    prop_32,
    lemma_A1,
    lemma_A2,
    lemma_A3
};

std::string identity_name(IdentityId id);
IdentityId parse_identity(const std::string& s);
bool is_integral(IdentityId id);
std::vector<IdentityId> all_identities();

struct PointwiseResidual {
    double residual = 0.0;  // L-inf over interior points and components
    double scale = 0.0;     // L-inf of the largest term, floored by max|h|^k in the identity's units
};

PointwiseResidual pointwise_identity(IdentityId id, const Geometry& geo);

struct GammaSpec {
    std::array<double, 4> center{};
    double rho = 1.0;
};

struct IntegralResidual {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;          // |lhs - rhs|
    double scale = 0.0;             // largest |summand|
    double literal_residual = 0.0;  // prop_32 only: residual with T exactly as displayed
    std::vector<std::pair<std::string, double>> summands;
};

// Every gamma-independent integrand of the four integral identities, sampled once per geometry.
class IntegralFields {
public:
    explicit IntegralFields(const Geometry& geo);
    IntegralResidual evaluate(IdentityId id, const CutoffFields& cut) const;
    GridPtr grid() const { return grid_; }

private:
    GridPtr grid_;
    FieldD sqrtg_;
    std::map<std::string, FieldD> s_;  // scalar integrands
    std::map<std::string, FieldD> c_;  // contravariant currents paired with gamma^(p-1) d gamma

    double integral(const std::string& key, const CutoffFields& cut) const;
    double current(const std::string& key, const CutoffFields& cut) const;
};

struct IdentityCase {
    IdentityId id = IdentityId::codazzi;
    ShapeSpec shape;
    std::vector<int> grids;  // two resolutions
    std::optional<GammaSpec> gamma;
    double p = 4.0;
    double tol = 1e-4;
    std::string label;  // the manifest line
};

struct IdentityResult {
    IdentityCase c;
    std::vector<double> residuals, scales, spacings;
    std::vector<double> literal_residuals;  // prop_32 only
    double order = 0.0;
    bool at_floor = false;
    bool pass = false;
    double seconds = 0.0;
    std::vector<std::pair<std::string, double>> summands;  // at the finest grid
};

// Manifest rows: id shape grid[/grid2] gamma p tol, with shape = kind[:r1,r2,..] or file:PATH
// (PATH relative to base_dir) and gamma = cx,cy,cz,cw:rho or '-'.
std::vector<IdentityCase> parse_manifest(const std::string& text, const std::string& base_dir = "");
std::vector<IdentityCase> load_manifest(const std::string& path);

// Relative residual below which two resolutions count as rounding-limited rather than converging.
constexpr double kRoundingFloor = 1e-11;

class IdentityRunner {
public:
    explicit IdentityRunner(int fd_order = 8) : order_(fd_order) {}
    IdentityResult run(const IdentityCase& c);

private:
    int order_;
    std::map<std::string, std::shared_ptr<IntegralFields>> integral_cache_;
    std::map<std::string, PointwiseResidual> pointwise_cache_;
    std::string geometry_key_;  // the most recent geometry is kept for the next case on the same shape
    std::shared_ptr<const Geometry> geometry_;
    std::shared_ptr<const Geometry> geometry(const ShapeSpec& s, int n);
    std::shared_ptr<IntegralFields> integral_fields(const ShapeSpec& s, int n);
    PointwiseResidual pointwise(IdentityId id, const ShapeSpec& s, int n);
};

// (int |u|^(4/3))^(3/4) / int (|grad u| + |H u|): the Michael-Simon ratio without its constant. Diagnostic only.
double sobolev_ratio(const Geometry& geo, const FieldD& u);

std::string shape_key(const ShapeSpec& s);

}  // namespace w4
