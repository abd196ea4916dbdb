#pragma once

// JSON model files, report documents, and CSV emission.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsb/bayesian.hpp"
#include "gsb/classical.hpp"
#include "gsb/error.hpp"
#include "gsb/model.hpp"
#include "gsb/quantum.hpp"

namespace gsb {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

namespace detail {

inline std::vector<double> as_vector(const json& j, const std::string& field) {
    require(j.contains(field), "invalid-model", "missing field \"" + field + "\"");
    require(j.at(field).is_array(), "invalid-model", "field \"" + field + "\" must be an array");
    return j.at(field).get<std::vector<double>>();
}

inline std::vector<std::vector<double>> as_table(const json& j, const std::string& field) {
    require(j.contains(field) && j.at(field).is_array(), "invalid-model",
            "field \"" + field + "\" must be an array of rows");
    std::vector<std::vector<double>> out;
    for (const auto& row : j.at(field)) out.push_back(row.get<std::vector<double>>());
    return out;
}

// central differences on the parameter grid itself (tabulated models carry
// no off-grid evaluations); one-sided at the ends
inline std::vector<std::vector<double>> grid_derivatives(const std::vector<double>& params,
                                                         const std::vector<std::vector<double>>& probs) {
    const std::size_t n = params.size();
    require(n >= 2, "invalid-model", "derivatives need at least two grid points");
    std::vector<std::vector<double>> out(n, std::vector<double>(probs.front().size(), 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? i : i + 1;
        const double dt = params[hi] - params[lo];
        for (std::size_t x = 0; x < probs.front().size(); ++x)
            out[i][x] = (probs[hi][x] - probs[lo][x]) / dt;
    }
    return out;
}

inline HermMatrix herm_from_json(const json& rows, int dim, const std::string& what) {
    require(rows.is_array() && static_cast<int>(rows.size()) == dim, "invalid-family",
            what + " must be a " + std::to_string(dim) + "-row matrix");
    std::vector<cplx> buf;
    buf.reserve(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
    for (const auto& row : rows) {
        require(static_cast<int>(row.size()) == dim, "invalid-family", what + " row length mismatch");
        for (const auto& cell : row) {
            require(cell.is_array() && cell.size() == 2, "invalid-family",
                    what + " entries must be [re, im] pairs");
            buf.emplace_back(cell[0].get<double>(), cell[1].get<double>());
        }
    }
    return HermMatrix::from_dense(dim, buf);
}

inline json herm_to_json(const HermMatrix& m) {
    json rows = json::array();
    for (int j = 0; j < m.dim(); ++j) {
        json row = json::array();
        for (int k = 0; k < m.dim(); ++k) row.push_back({m(j, k).real(), m(j, k).imag()});
        rows.push_back(row);
    }
    return rows;
}

}  // namespace detail

inline DiscreteModel discrete_model_from_json(const json& j) {
    DiscreteModel m;
    require(j.contains("outcomes") && j.at("outcomes").is_array(), "invalid-model",
            "missing field \"outcomes\"");
    for (const auto& o : j.at("outcomes"))
        m.outcomes.push_back(o.is_string() ? o.get<std::string>() : o.dump());
    m.params = detail::as_vector(j, "params");
    m.probs = detail::as_table(j, "probs");
    m.weights = detail::as_vector(j, "weights");
    if (j.contains("derivs"))
        m.derivs = detail::as_table(j, "derivs");
    else
        m.derivs = detail::grid_derivatives(m.params, m.probs);
    m.validate();
    return m;
}

inline DiscreteModel load_discrete_model(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "bad-file", "cannot open model file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail("invalid-model", "JSON parse error in " + path + ": " + e.what());
    }
    return discrete_model_from_json(j);
}

inline StateFamily state_family_from_json(const json& j) {
    StateFamily fam;
    require(j.contains("dim"), "invalid-family", "missing field \"dim\"");
    fam.dim = j.at("dim").get<int>();
    fam.params = detail::as_vector(j, "params");
    fam.weights = detail::as_vector(j, "weights");

    const bool has_generator = j.contains("state_generator");
    double gen_d = 0.0;
    if (has_generator) {
        const auto& gen = j.at("state_generator");
        require(gen.contains("name") && gen.at("name") == "planar_qubit", "invalid-family",
                "unknown state generator (supported: planar_qubit)");
        require(gen.contains("d"), "invalid-family", "planar_qubit generator needs \"d\"");
        gen_d = gen.at("d").get<double>();
    }

    if (j.contains("states")) {
        for (std::size_t i = 0; i < j.at("states").size(); ++i)
            fam.states.push_back(detail::herm_from_json(j.at("states")[i], fam.dim,
                                                        "state " + std::to_string(i)));
    } else {
        require(has_generator, "invalid-family", "either \"states\" or a state generator is required");
        const StateFamily gen = StateFamily::planar_qubit(gen_d, fam.params, fam.weights);
        fam.states = gen.states;
    }

    if (j.contains("dstates")) {
        for (std::size_t i = 0; i < j.at("dstates").size(); ++i)
            fam.dstates.push_back(detail::herm_from_json(j.at("dstates")[i], fam.dim,
                                                         "dstate " + std::to_string(i)));
    } else if (has_generator) {
        // central finite differences through the generator
        for (std::size_t i = 0; i < fam.params.size(); ++i) {
            const double th = fam.params[i];
            const double h = 1e-5 * (1.0 + std::abs(th));
            const StateFamily plus = StateFamily::planar_qubit(gen_d, {th + h});
            const StateFamily minus = StateFamily::planar_qubit(gen_d, {th - h});
            HermMatrix d = plus.states[0];
            d -= minus.states[0];
            d *= 1.0 / (2.0 * h);
            fam.dstates.push_back(d);
        }
    } else {
        fail("invalid-family", "\"dstates\" missing and no state generator given");
    }
    fam.validate();
    return fam;
}

inline StateFamily load_state_family(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "bad-file", "cannot open state-family file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail("invalid-family", "JSON parse error in " + path + ": " + e.what());
    }
    return state_family_from_json(j);
}

// 17 significant digits: round-trips doubles exactly
inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline json bound_report_to_json(const BoundReport& rep) {
    json out;
    out["bounds"] = {{"gcr", rep.gcr}, {"gbar", rep.gbar}, {"fg", rep.fg}};
    out["diagnostics"]["ranks"] = rep.ranks;
    if (rep.saturating_a) {
        out["diagnostics"]["saturating_a"] = json::array();
        for (int j = 0; j < rep.saturating_a->n; ++j) {
            json row = json::array();
            for (int i = 0; i < rep.saturating_a->n; ++i) row.push_back((*rep.saturating_a)(j, i));
            out["diagnostics"]["saturating_a"].push_back(row);
        }
    }
    return out;
}

inline json povm_to_json(const Povm& povm) {
    json out = json::array();
    for (const HermMatrix& e : povm.elements) out.push_back(detail::herm_to_json(e));
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "bad-file", "cannot open output file " + path);
    out << content;
    require(out.good(), "bad-file", "failed writing " + path);
}

}  // namespace gsb
