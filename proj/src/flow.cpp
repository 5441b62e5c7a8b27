#include "w4/flow.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace w4 {

FlowState initial_state(const ShapeSpec& s, GridPtr g)
{
    FlowState st;
    st.base = shape_jet(s, g);
    st.disp = FieldD(g, 0, st.base.phi.m);
    return st;
}

double min_physical_spacing(const Geometry& geo)
{
    const Grid4& g = *geo.grid;
    double s = std::numeric_limits<double>::infinity();
    for (long p = 0; p < g.size(); ++p) {
        if (!g.interior(p)) continue;
        for (int a = 0; a < 4; ++a) s = std::min(s, std::sqrt(geo.g.v(a * 4 + a, p)) * g.spacing[a]);
    }
    return s;
}

StepResult flow_step(const FlowState& st, double dt)
{
    if (!(dt >= 0.0)) throw std::invalid_argument("dt must be non-negative");
    StepResult r;
    const Geometry geo = build_geometry(displaced_jet(st.base, st.disp));
    const FieldD W = willmore(geo);
    r.energy_before = total_energy(geo);
    r.residual_linf = max_norm(W);
    const double wmax = max_norm(W, false);
    r.tangential_ratio = wmax > 0.0 ? max_tangential(geo, W) / wmax : 0.0;
    r.disp = st.disp;
    r.disp.v -= dt * W.v;
    const Geometry next = build_geometry(displaced_jet(st.base, r.disp));
    r.energy_after = total_energy(next);
    r.min_det_after = next.min_det;
    return r;
}

FlowResult run_flow(const ShapeSpec& s, GridPtr g, const FlowConfig& cfg)
{
    if (cfg.steps < 0) throw std::invalid_argument("steps must be non-negative");
    if (cfg.steps > cfg.cap)
        throw std::invalid_argument("steps " + std::to_string(cfg.steps) + " exceed the cap " + std::to_string(cfg.cap));
    // a bounded patch has no boundary conditions for a fourth-order flow
    for (int a = 0; a < 4; ++a)
        if (!g->periodic[a]) throw std::invalid_argument("flow needs a periodic shape (torus4 family)");
    FlowResult out;
    out.final_state = initial_state(s, g);
    FlowState& st = out.final_state;
    double dt = cfg.dt;
    {
        const Geometry geo = build_geometry(displaced_jet(st.base, st.disp));
        if (dt < 0.0) dt = cfg.cfl * std::pow(min_physical_spacing(geo), 6);
        out.trace.push_back({0, total_energy(geo), max_norm(willmore(geo)), geo.min_det, 0.0});
    }
    for (int k = 1; k <= cfg.steps; ++k) {
        bool accepted = false;
        for (int tries = 0; tries <= cfg.max_halvings; ++tries) {
            StepResult r;
            try {
                r = flow_step(st, dt);
            } catch (const std::runtime_error& e) {
                out.degenerate = true;
                out.message = std::string("step ") + std::to_string(k) + " aborted: " + e.what();
                return out;
            }
            out.max_tangential_ratio = std::max(out.max_tangential_ratio, r.tangential_ratio);
            if (r.energy_after <= r.energy_before + cfg.rounding * std::abs(r.energy_before)) {
                if (r.energy_after > r.energy_before) out.monotone = false;
                st.disp = std::move(r.disp);
                // the residual column belongs to the accepted state, so evaluate W there
                const Geometry geo = build_geometry(displaced_jet(st.base, st.disp));
                out.trace.push_back({k, r.energy_after, max_norm(willmore(geo)), r.min_det_after, dt});
                ++out.accepted;
                accepted = true;
                break;
            }
            if (tries == cfg.max_halvings) break;
            dt *= 0.5;
            ++out.halvings;
        }
        if (!accepted) {
            out.stiffness_limit = true;
            char buf[160];
            std::snprintf(buf, sizeof buf, "stiffness limit: energy still increases at step %d after %d halvings (dt = %.3e)",
                          k, cfg.max_halvings, dt);
            out.message = buf;
            return out;
        }
    }
    return out;
}

void write_flow_csv(std::ostream& out, const std::vector<FlowRow>& trace)
{
    out << "step,energy,residual_Linf,min_det_g,dt\n";
    char buf[160];
    for (const FlowRow& r : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.step, r.energy, r.residual_linf, r.min_det_g, r.dt);
        out << buf;
    }
}

}  // namespace w4
