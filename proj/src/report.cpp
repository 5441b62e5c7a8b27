#include "w4/report.hpp"

#include <cmath>
#include <cstdio>

namespace w4 {

namespace {

void write_string(std::string& out, const std::string& s) { out += Json(s).dump(); }

void write(std::string& out, const Json& j, int depth)
{
    const std::string pad(2 * (depth + 1), ' ');
    const std::string close(2 * depth, ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ",\n";
            first = false;
            out += pad;
            write_string(out, it.key());
            out += ": ";
            write(out, it.value(), depth + 1);
        }
        out += "\n" + close + "}";
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // arrays of scalars stay on one line
        bool flat = true;
        for (const auto& e : j) flat = flat && !e.is_structured();
        out += flat ? "[" : "[\n";
        bool first = true;
        for (const auto& e : j) {
            if (!first) out += flat ? ", " : ",\n";
            first = false;
            if (!flat) out += pad;
            write(out, e, depth + 1);
        }
        out += flat ? "]" : "\n" + close + "]";
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            out += "null";
            return;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
        return;
    }
    default: out += j.dump();
    }
}

}  // namespace

std::string to_json_text(const Json& j)
{
    std::string out;
    write(out, j, 0);
    out += "\n";
    return out;
}

Json shape_json(const ShapeSpec& s)
{
    Json j;
    j["kind"] = kind_name(s.kind);
    j["radii"] = s.radii;
    j["clamp"] = s.clamp;
    j["window"] = s.window;
    j["scale"] = s.scale;
    if (s.perturbation) {
        const Perturbation& p = *s.perturbation;
        Json q;
        q["eps"] = p.eps;
        q["center"] = p.center;
        q["rho"] = p.rho;
        if (p.along_H) q["direction"] = "H";
        else if (p.direction.empty()) q["direction"] = "H_at_center";
        else q["direction"] = p.direction;
        q["envelope"] = p.envelope == Envelope::periodic ? "periodic" : "compact";
        q["profile"] = p.profile == Profile::smooth ? "smooth" : "quintic";
        j["perturbation"] = q;
    } else {
        j["perturbation"] = nullptr;
    }
    return j;
}

Json grid_json(const Grid4& g)
{
    Json j;
    j["dims"] = g.dims;
    j["spacing"] = g.spacing;
    j["origin"] = g.origin;
    j["periodic"] = g.periodic;
    j["fd_order"] = g.order;
    j["margin"] = g.margin;
    return j;
}

Json CheckReport::to_json() const
{
    Json j;
    j["name"] = name;
    j["config"] = config;
    j["grid"] = grid;
    j["residuals"] = residuals;
    j["orders"] = orders;
    Json t = Json::array();
    for (const Tolerance& x : tolerances) t.push_back(Json{{"name", x.name}, {"value", x.value}, {"provenance", x.provenance}});
    j["tolerances"] = t;
    j["details"] = details;
    j["pass"] = pass;
    j["seconds"] = seconds;
    return j;
}

Json report_document(const std::string& command, const std::vector<CheckReport>& reports)
{
    Json j;
    j["tool"] = "w4check";
    j["command"] = command;
    bool pass = true;
    Json arr = Json::array();
    for (const CheckReport& r : reports) {
        pass = pass && r.pass;
        arr.push_back(r.to_json());
    }
    j["pass"] = pass;
    j["reports"] = arr;
    return j;
}

}  // namespace w4
