#include "w4/commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace w4 {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ShapeSpec without_perturbation(ShapeSpec s)
{
    s.perturbation.reset();
    return s;
}

double coarse_spacing(const Grid4& g)
{
    double h = 0.0;
    for (int a = 0; a < 4; ++a) h = std::max(h, g.spacing[a]);
    return h;
}

bool fully_periodic(const Grid4& g)
{
    for (int a = 0; a < 4; ++a)
        if (!g.periodic[a]) return false;
    return true;
}

std::optional<CutoffFields> gamma_of(const Options& o, GridPtr g)
{
    if (o.gamma_center.has_value() != o.gamma_rho.has_value())
        throw std::invalid_argument("--gamma-center and --gamma-rho go together");
    if (!o.gamma_center) return std::nullopt;
    return cutoff_field(g, *o.gamma_center, *o.gamma_rho, o.p);
}

CheckReport base_report(const std::string& name, const Options& o, const Grid4& g)
{
    CheckReport r;
    r.name = name;
    r.config = options_json(o);
    r.grid = grid_json(g);
    return r;
}

CheckReport residual_report(const Options& o, const ShapeSpec& shape)
{
    const auto t0 = Clock::now();
    Options local = o;
    local.shape = shape;
    const GridPtr g = shape_grid(shape, o.grid, o.fd_order);
    const Geometry geo = build_geometry(shape_jet(shape, g));
    const auto cut = gamma_of(o, g);
    const WillmoreFields wf = willmore_terms(geo);
    const ResidualNorms n = residual_norms(geo, wf, cut ? &cut->gamma_p : nullptr);
    CheckReport r = base_report("residual", local, *g);
    r.residuals["W_Linf"] = n.linf;
    r.residuals["W_L2"] = n.l2;
    r.residuals["W_tangential_ratio"] = n.linf > 0.0 ? max_tangential(geo, wf.W) / max_norm(wf.W, false) : 0.0;
    r.residuals["energy"] = total_energy(geo);
    r.residuals["radii_square_sum"] = radii_square_sum(shape);
    Json terms = Json::array();
    for (const TermStat& t : n.per_term)
        terms.push_back(Json{{"name", t.name}, {"Linf", t.linf}, {"coef_in_H", t.coef_in_H}, {"coef_spread", t.coef_spread}});
    r.details["per_term"] = terms;
    r.pass = true;
    if (o.tol) {
        r.tolerances.push_back({"W_Linf", *o.tol, "user"});
        r.pass = n.linf <= *o.tol;
    }
    r.seconds = since(t0);
    return r;
}

}  // namespace

Json options_json(const Options& o)
{
    Json j;
    j["shape"] = shape_json(o.shape);
    j["grid"] = o.grid;
    j["fd_order"] = o.fd_order;
    j["gamma_center"] = o.gamma_center ? Json(*o.gamma_center) : Json(nullptr);
    j["gamma_rho"] = o.gamma_rho ? Json(*o.gamma_rho) : Json(nullptr);
    j["p"] = o.p;
    j["seed"] = o.seed ? Json(*o.seed) : Json(nullptr);
    j["threads"] = o.threads;
    return j;
}

Perturbation variation_spec(const Options& o, const Grid4& g, bool flux)
{
    if (o.shape.perturbation) return *o.shape.perturbation;
    Perturbation p;
    p.eps = 0.0;
    const bool periodic = fully_periodic(g);
    for (int a = 0; a < 4; ++a) p.center[a] = g.origin[a] + 0.5 * (g.dims[a] - 1) * g.spacing[a];
    if (flux && periodic) {
        // centred just outside the default box on axis 0, smooth periodic envelope
        p.center[0] = g.coord(0, 1);
        p.envelope = Envelope::periodic;
        p.along_H = true;
        p.rho = 1.3;
    } else if (periodic) {
        p.rho = 1.5;
    } else {
        double room = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 4; ++a) {
            if (g.periodic[a]) continue;
            const double lo = g.coord(a, g.margin), hi = g.coord(a, g.dims[a] - 1 - g.margin);
            room = std::min({room, p.center[a] - lo, hi - p.center[a]});
        }
        p.rho = 0.9 * room;
    }
    if (o.bump_center) p.center = *o.bump_center;
    if (o.bump_rho) p.rho = *o.bump_rho;
    if (o.seed) {
        std::mt19937_64 rng(*o.seed);
        std::normal_distribution<double> nd;
        p.direction.resize(ambient_dim(o.shape.kind));
        for (double& d : p.direction) d = nd(rng);
        p.along_H = false;
    }
    return p;
}

std::vector<CheckReport> cmd_energy(const Options& o)
{
    const auto t0 = Clock::now();
    const GridPtr g = shape_grid(o.shape, o.grid, o.fd_order);
    const Geometry geo = build_geometry(shape_jet(o.shape, g));
    const FieldD e = energy_density(geo);
    CheckReport r = base_report("energy", o, *g);
    r.residuals["energy"] = total_energy(geo);
    if (const auto cut = gamma_of(o, g)) r.residuals["energy_gamma_p"] = total_energy(geo, &cut->gamma_p);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (long p = 0; p < e.points(); ++p) {
        if (!g->interior(p)) continue;
        lo = std::min(lo, e.v(0, p));
        hi = std::max(hi, e.v(0, p));
    }
    r.residuals["density_min"] = lo;
    r.residuals["density_max"] = hi;
    r.residuals["volume"] = integrate(constant_field(g, 1.0), geo.sqrtg);
    r.residuals["radii_square_sum"] = radii_square_sum(o.shape);
    r.pass = true;
    r.seconds = since(t0);
    return {r};
}

std::vector<CheckReport> cmd_residual(const Options& o)
{
    if (o.ratios.empty()) return {residual_report(o, o.shape)};
    if (o.shape.kind != ShapeKind::s2xs2) throw std::invalid_argument("--ratios needs --shape s2xs2");
    std::vector<CheckReport> out;
    for (double q : o.ratios) {
        if (!(q > 0.0)) throw std::invalid_argument("radius ratios must be positive");
        ShapeSpec s = o.shape;
        s.radii = {q / std::sqrt(1.0 + q * q), 1.0 / std::sqrt(1.0 + q * q)};
        CheckReport r = residual_report(o, s);
        r.name = "residual_ratio_scan";
        r.residuals["ratio"] = q;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<CheckReport> cmd_gradcheck(const Options& o)
{
    const auto t0 = Clock::now();
    const ShapeSpec base_spec = without_perturbation(o.shape);
    const GridPtr g = shape_grid(base_spec, o.grid, o.fd_order);
    const Jet base = sample_jet(base_spec, g);
    const Perturbation pert = variation_spec(o, *g, false);
    const FieldD B = variation_field(base, pert);
    const GradientCheck c = gradient_check(base, B, o.eps_count);
    CheckReport r = base_report("gradcheck", o, *g);
    r.config["variation"] = shape_json([&] {
        ShapeSpec s = base_spec;
        s.perturbation = pert;
        return s;
    }())["perturbation"];
    r.residuals["energy"] = c.energy;
    r.residuals["delta_fd"] = c.delta_fd;
    r.residuals["delta_w"] = c.delta_w;
    r.residuals["abs_error"] = c.abs_error;
    r.residuals["tolerance"] = c.tolerance;
    r.residuals["min_det_g"] = c.fd.min_det;
    r.residuals["eps_shrinks"] = c.fd.shrinks;
    r.orders["fd_raw"] = c.fd.observed_order;
    r.tolerances.push_back({"relative_to_delta_fd", 1e-3, "derived"});
    r.tolerances.push_back({"relative_to_energy", 1e-7, "stated"});
    r.details["eps"] = c.fd.eps;
    r.details["central_differences"] = c.fd.diffs;
    r.pass = c.pass;
    r.seconds = since(t0);
    return {r};
}

std::vector<CheckReport> cmd_flux(const Options& o)
{
    const auto t0 = Clock::now();
    const ShapeSpec base_spec = without_perturbation(o.shape);
    const GridPtr g = shape_grid(base_spec, o.grid, o.fd_order);
    const Jet base = sample_jet(base_spec, g);
    const Perturbation pert = variation_spec(o, *g, true);
    const FieldD B = variation_field(base, pert);
    Box box;
    for (int a = 0; a < 4; ++a) {
        box.lo[a] = o.box_lo.value_or(3);
        box.hi[a] = o.box_hi.value_or(g->dims[a] - 4);
    }
    const FluxCheck c = subdomain_flux_check(base, B, box, o.end_correction, o.eps_count);
    CheckReport r = base_report("flux", o, *g);
    ShapeSpec echo = base_spec;
    echo.perturbation = pert;
    r.config["variation"] = shape_json(echo)["perturbation"];
    r.config["box_lo"] = box.lo;
    r.config["box_hi"] = box.hi;
    r.config["end_correction"] = o.end_correction;
    r.residuals["delta_fd"] = c.delta_fd;
    r.residuals["bulk"] = c.bulk;
    r.residuals["flux"] = c.flux;
    r.residuals["rel_error"] = c.rel_error;
    r.orders["fd_raw"] = c.fd.observed_order;
    r.tolerances.push_back({"rel_error", c.tolerance, "derived"});
    r.details["eps"] = c.fd.eps;
    r.details["central_differences"] = c.fd.diffs;
    r.pass = c.pass;
    r.seconds = since(t0);
    return {r};
}

std::vector<CheckReport> cmd_identities(const Options& o)
{
    if (o.manifest.empty()) throw std::invalid_argument("identities needs --manifest");
    std::vector<IdentityCase> cases = load_manifest(o.manifest);
    IdentityRunner runner(o.fd_order);
    std::vector<CheckReport> out;
    for (IdentityCase& c : cases) {
        if (o.grid_given) c.grids = {o.grid};
        const IdentityResult res = runner.run(c);
        CheckReport r;
        r.name = "identity:" + identity_name(c.id);
        r.config["manifest_row"] = c.label;
        r.config["shape"] = shape_json(c.shape);
        r.config["grids"] = c.grids;
        r.config["fd_order"] = o.fd_order;
        if (c.gamma) {
            r.config["gamma_center"] = c.gamma->center;
            r.config["gamma_rho"] = c.gamma->rho;
            r.config["p"] = c.p;
        }
        r.grid["dims"] = c.grids;
        r.grid["spacing"] = res.spacings;
        r.residuals["residual"] = res.residuals;
        r.residuals["scale"] = res.scales;
        if (c.id == IdentityId::prop_32) r.residuals["literal_residual"] = res.literal_residuals;
        r.residuals["at_rounding_floor"] = res.at_floor;
        r.orders["observed"] = res.residuals.size() >= 2 ? Json(res.order) : Json(nullptr);
        r.tolerances.push_back({"relative_to_scale", c.tol, "derived"});
        r.tolerances.push_back({"absolute_floor", 1e-10, "trivial"});
        r.tolerances.push_back({"minimum_order", 2.0, "derived"});
        Json sm = Json::object();
        for (const auto& [k, v] : res.summands) sm[k] = v;
        r.details["summands"] = sm;
        r.pass = res.pass;
        r.seconds = res.seconds;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<CheckReport> cmd_flow(const Options& o)
{
    const auto t0 = Clock::now();
    const GridPtr g = shape_grid(o.shape, o.grid, o.fd_order);
    if (!fully_periodic(*g)) throw std::invalid_argument("flow needs a periodic shape (torus4 family)");
    FlowConfig cfg;
    cfg.steps = o.steps;
    cfg.dt = o.dt;
    cfg.cfl = o.cfl;
    const FlowResult f = run_flow(o.shape, g, cfg);
    if (!o.csv.empty()) {
        std::ofstream csv(o.csv);
        if (!csv) throw std::invalid_argument("cannot write " + o.csv);
        write_flow_csv(csv, f.trace);
    }
    CheckReport r = base_report("flow", o, *g);
    r.config["steps"] = cfg.steps;
    r.config["dt"] = cfg.dt;
    r.config["cfl"] = cfg.cfl;
    r.residuals["energy_initial"] = f.trace.front().energy;
    r.residuals["energy_final"] = f.trace.back().energy;
    r.residuals["accepted_steps"] = f.accepted;
    r.residuals["halvings"] = f.halvings;
    r.residuals["monotone"] = f.monotone;
    r.residuals["stiffness_limit"] = f.stiffness_limit;
    r.residuals["degenerate"] = f.degenerate;
    r.residuals["max_tangential_ratio"] = f.max_tangential_ratio;
    r.tolerances.push_back({"tangential_ratio", 1e-6, "derived"});
    r.tolerances.push_back({"energy_increase_relative", cfg.rounding, "convention"});
    Json trace = Json::array();
    for (const FlowRow& row : f.trace)
        trace.push_back(Json{{"step", row.step}, {"energy", row.energy}, {"residual_Linf", row.residual_linf},
                             {"min_det_g", row.min_det_g}, {"dt", row.dt}});
    r.details["trace"] = trace;
    r.details["message"] = f.message;
    r.pass = !f.degenerate && f.monotone && (f.accepted == cfg.steps || f.stiffness_limit) &&
             f.max_tangential_ratio <= 1e-6;
    r.seconds = since(t0);
    return {r};
}

std::vector<CheckReport> cmd_convergence(const Options& o)
{
    const auto t0 = Clock::now();
    const std::vector<int> grids = o.grids.empty() ? std::vector<int>{12, 16, 24} : o.grids;
    if (grids.size() < 2) throw std::invalid_argument("convergence needs at least two grids");
    std::vector<double> res, hs, energies;
    GridPtr last;
    for (int n : grids) {
        last = shape_grid(o.shape, n, o.fd_order);
        const Geometry geo = build_geometry(shape_jet(o.shape, last));
        res.push_back(max_norm(willmore(geo)));
        energies.push_back(total_energy(geo));
        hs.push_back(coarse_spacing(*last));
    }
    CheckReport r = base_report("convergence", o, *last);
    r.config["grids"] = grids;
    r.residuals["W_Linf"] = res;
    r.residuals["energy"] = energies;
    r.residuals["spacing"] = hs;
    Json orders = Json::array();
    double final_order = 0.0;
    for (size_t i = 0; i + 1 < res.size(); ++i) {
        if (res[i] > 0.0 && res[i + 1] > 0.0) {
            final_order = std::log(res[i] / res[i + 1]) / std::log(hs[i] / hs[i + 1]);
            orders.push_back(final_order);
        } else {
            orders.push_back(nullptr);
        }
    }
    r.orders["W_Linf"] = orders;
    r.pass = true;
    if (o.min_order) {
        r.tolerances.push_back({"minimum_order", *o.min_order, "derived"});
        r.pass = res.back() <= 1e-10 || final_order >= *o.min_order;
    }
    r.seconds = since(t0);
    return {r};
}

std::vector<CheckReport> run_command(const std::string& name, const Options& o)
{
    if (name == "energy") return cmd_energy(o);
    if (name == "residual") return cmd_residual(o);
    if (name == "gradcheck") return cmd_gradcheck(o);
    if (name == "flux") return cmd_flux(o);
    if (name == "identities") return cmd_identities(o);
    if (name == "flow") return cmd_flow(o);
    if (name == "convergence") return cmd_convergence(o);
    throw std::invalid_argument("unknown command '" + name + "'");
}

}  // namespace w4
