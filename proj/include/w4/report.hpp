#pragma once

#include "w4/shapes.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace w4 {

using Json = nlohmann::ordered_json;

// Two-space indented JSON in insertion order; floats as %.17g, non-finite values as null.
std::string to_json_text(const Json& j);

Json shape_json(const ShapeSpec& s);
Json grid_json(const Grid4& g);

struct Tolerance {
    std::string name;
    double value = 0.0;
    std::string provenance;  // "derived", "stated", "trivial" or "convention"
};

struct CheckReport {
    std::string name;
    Json config = Json::object();     // everything needed to rerun the check
    Json grid = Json::object();
    Json residuals = Json::object();  // named norms and measured values
    Json orders = Json::object();     // observed convergence orders
    std::vector<Tolerance> tolerances;
    Json details = Json::object();    // per-term tables, traces, summands
    bool pass = false;
    double seconds = 0.0;

    Json to_json() const;
};

// {"tool", "command", "pass", "reports": [...]}; pass is the conjunction of the reports.
Json report_document(const std::string& command, const std::vector<CheckReport>& reports);

}  // namespace w4
