// Command-line front end: loads model files (or built-in generators), runs
// the bound computations, and emits JSON reports and figure CSV data.
//
// Exit codes: 0 success, 2 input validation failure, 3 mathematical
// precondition failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsb/gsb.hpp"
#include "gsb/io.hpp"

namespace {

using gsb::json;

const std::set<std::string> kValidationCodes = {
    "invalid-model", "invalid-config", "invalid-family", "invalid-argument",
    "invalid-povm",  "bad-file",
};

int exit_code_for(const gsb::Error& err) { return kValidationCodes.count(err.code()) ? 2 : 3; }

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    long seed = 0;
    std::vector<std::string> overrides;
};

json parse_override_value(const std::string& text) {
    if (text.find(',') != std::string::npos) {
        json arr = json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            gsb::require(!item.empty(), "invalid-config", "empty element in override list");
            arr.push_back(std::stod(item));
        }
        return arr;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return json(v);
    } catch (const std::exception&) {
    }
    return json(text);
}

json load_config(const CommonArgs& args) {
    json cfg = json::object();
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        gsb::require(in.good(), "bad-file", "cannot open config file " + args.config_path);
        try {
            in >> cfg;
        } catch (const json::exception& e) {
            gsb::fail("invalid-config", std::string("JSON parse error: ") + e.what());
        }
        gsb::require(cfg.is_object(), "invalid-config", "config root must be an object");
    }
    for (const std::string& ov : args.overrides) {
        const std::size_t eq = ov.find('=');
        gsb::require(eq != std::string::npos && eq > 0, "invalid-config",
                     "override must be key=value: " + ov);
        try {
            cfg[ov.substr(0, eq)] = parse_override_value(ov.substr(eq + 1));
        } catch (const std::exception&) {
            gsb::fail("invalid-config", "cannot parse override value in: " + ov);
        }
    }
    cfg["seed"] = args.seed;
    return cfg;
}

double cfg_num(const json& cfg, const std::string& key, double fallback) {
    if (cfg.contains(key)) return cfg.at(key).get<double>();
    return fallback;
}

std::vector<double> cfg_vec(const json& cfg, const std::string& key, std::vector<double> fallback) {
    if (cfg.contains(key)) return cfg.at(key).get<std::vector<double>>();
    return fallback;
}

json provenance(const json& cfg) {
    return json{{"config", cfg}, {"version", gsb::kVersion}};
}

void write_json(const std::string& path, const json& doc) {
    gsb::write_text_file(path, doc.dump(2) + "\n");
}

gsb::DiscreteModel resolve_model(const json& cfg) {
    if (cfg.contains("model")) {
        const json& m = cfg.at("model");
        if (m.is_string()) return gsb::load_discrete_model(m.get<std::string>());
        return gsb::discrete_model_from_json(m);
    }
    if (cfg.value("generator", "") == std::string("binary_sine")) {
        const double d = cfg_num(cfg, "d", 0.5);
        const int n = static_cast<int>(cfg_num(cfg, "n", 8));
        std::vector<double> domain = cfg_vec(cfg, "domain", {0.0, M_PI});
        gsb::require(domain.size() == 2, "invalid-config", "domain must be [lo, hi]");
        const std::string grid = cfg.value("grid", "inclusive");
        std::vector<double> params = grid == "left" ? gsb::uniform_grid_left(domain[0], domain[1], n)
                                                    : gsb::uniform_grid_inclusive(domain[0], domain[1], n);
        return gsb::BinaryModel::sine(d, params, cfg_vec(cfg, "weights", {})).to_discrete();
    }
    gsb::fail("invalid-config", "classical command needs a \"model\" (file or inline) or a binary_sine generator");
}

gsb::StateFamily resolve_family(const json& cfg) {
    if (cfg.contains("family")) {
        const json& f = cfg.at("family");
        if (f.is_string()) return gsb::load_state_family(f.get<std::string>());
        return gsb::state_family_from_json(f);
    }
    // worked-example defaults
    const double d = cfg_num(cfg, "d", 0.5);
    std::vector<double> params = cfg_vec(cfg, "params", {0.0, M_PI / 4});
    return gsb::StateFamily::planar_qubit(d, params, cfg_vec(cfg, "weights", {}));
}

std::vector<double> resolve_bias(const json& cfg, int n) {
    std::vector<double> b = cfg_vec(cfg, "bias", {});
    if (b.empty() && n == 2) b = {1.0, 1.0 / std::sqrt(2.0)};
    gsb::require(static_cast<int>(b.size()) == n, "invalid-config",
                 "bias vector must have one entry per parameter point");
    return b;
}

int cmd_classical(const CommonArgs& args) {
    const json cfg = load_config(args);
    const gsb::DiscreteModel model = resolve_model(cfg);
    const gsb::TestFunctions g = gsb::local_scores(model);

    gsb::Estimator est;
    const json est_cfg = cfg.value("estimator", json("mle"));
    if (est_cfg.is_string() && est_cfg.get<std::string>() == "mle") {
        est = gsb::mle(model).estimator;
    } else if (est_cfg.is_object() && est_cfg.contains("values")) {
        est.values = est_cfg.at("values").get<std::vector<double>>();
        gsb::require(static_cast<int>(est.values.size()) == model.num_outcomes(), "invalid-config",
                     "estimator values must cover every outcome");
    } else {
        gsb::fail("invalid-config", "estimator must be \"mle\" or {\"values\": [...]}");
    }

    const gsb::BoundReport rep = gsb::compute_bounds(model, g, est);
    json doc = gsb::bound_report_to_json(rep);
    doc["diagnostics"]["weighted_variance"] = gsb::weighted_variance(model, est);
    const gsb::SaturationCheck sat = gsb::check_saturation(model, g, est);
    doc["diagnostics"]["saturation"] = {{"saturated", sat.saturated}, {"residual", sat.residual}};
    doc["diagnostics"]["existence"] = gsb::check_existence(model, g, est);
    doc["provenance"] = provenance(cfg);
    write_json(args.out_path, doc);
    return 0;
}

json quantum_report(const json& cfg, gsb::StateFamily& family, std::vector<double>& bias) {
    family = resolve_family(cfg);
    bias = resolve_bias(cfg, family.n());
    const gsb::ScoreOperators scores = gsb::ScoreOperators::local(family);
    const gsb::QuantumBounds qb = gsb::q_bounds(family, scores, bias);
    const gsb::CompatReport compat = gsb::compat_check(family, scores);
    json doc;
    doc["bounds"] = {{"gcr", qb.gcr}, {"gbar", qb.gbar}, {"fg", qb.fg}};
    doc["diagnostics"]["ranks"] = qb.ranks;
    doc["diagnostics"]["compat"] = {{"holds", compat.holds}, {"residuals", compat.residuals}};
    return doc;
}

int cmd_quantum(const CommonArgs& args) {
    const json cfg = load_config(args);
    gsb::StateFamily family;
    std::vector<double> bias;
    json doc = quantum_report(cfg, family, bias);
    doc["provenance"] = provenance(cfg);
    write_json(args.out_path, doc);
    return 0;
}

int cmd_povm(const CommonArgs& args) {
    const json cfg = load_config(args);
    gsb::StateFamily family;
    std::vector<double> bias;
    json doc = quantum_report(cfg, family, bias);

    const gsb::ScoreOperators scores = gsb::ScoreOperators::local(family);
    const gsb::OptimalPovm opt = gsb::optimal_povm(family, scores, bias);
    doc["povm"] = gsb::povm_to_json(opt.povm);
    doc["m_fg"] = {{"matrix", gsb::detail::herm_to_json(opt.m_fg)},
                   {"eigenvalues", opt.eigenvalues},
                   {"coefficients", opt.coeffs}};

    const gsb::InducedModel induced = gsb::induced_model(family, opt.povm, scores);
    doc["induced_bounds"] = {{"fg", gsb::induced_fg_at_bias(induced, bias)},
                             {"gcr", gsb::induced_gcr_at_bias(induced, bias)},
                             {"gbar", gsb::induced_gbar_at_bias(induced, bias)}};

    const gsb::OptimalityReport orep = gsb::verify_quantum_optimality(family, scores, opt.povm, bias);
    doc["optimality"] = {{"optimal", orep.optimal},
                         {"max_commutator_residual", orep.max_commutator_residual},
                         {"max_projection_residual", orep.max_projection_residual},
                         {"scalar_shifts", orep.scalar_shifts},
                         {"induced_fg", orep.induced_fg},
                         {"quantum_fg", orep.quantum_fg}};
    doc["provenance"] = provenance(cfg);
    write_json(args.out_path, doc);
    return 0;
}

std::vector<long> cfg_mlist(const json& cfg, const std::string& key, std::vector<long> fallback) {
    if (!cfg.contains(key)) return fallback;
    std::vector<long> out;
    for (const auto& v : cfg.at(key)) out.push_back(static_cast<long>(v.get<double>()));
    return out;
}

int cmd_fig1(const CommonArgs& args) {
    const json cfg = load_config(args);
    const double d = cfg_num(cfg, "d", 0.5);
    const int n = static_cast<int>(cfg_num(cfg, "n", 8));
    const long m_fixed = static_cast<long>(cfg_num(cfg, "m", 10));
    const std::vector<long> m_list = cfg_mlist(cfg, "m_list", {1, 2, 5, 10, 20, 50, 100, 200});
    const std::vector<long> n_list = cfg_mlist(cfg, "n_list", {2, 4, 8, 16});

    // panels (a)/(b): fixed n, m sweep on the endpoint-inclusive grid
    const gsb::BinaryModel model_ab = gsb::BinaryModel::sine(d, gsb::uniform_grid_inclusive(0.0, M_PI, n));
    const std::vector<gsb::RepetitionDiag> diags = gsb::obs1_diag(model_ab, m_list);
    std::string csv_ab = "m,b_fg,b_gcr,b_gbar,ratio\n";
    for (const gsb::RepetitionDiag& dg : diags) {
        csv_ab += std::to_string(dg.m) + "," + gsb::format_full(dg.bound_fg) + "," +
                  gsb::format_full(dg.bound_gcr) + "," + gsb::format_full(dg.bound_gbar) + "," +
                  gsb::format_full(dg.ratio_fg_gcr) + "\n";
    }
    gsb::write_text_file(args.out_path + "_ab.csv", csv_ab);

    // panel (c): fixed m, n sweep; the left-aligned grid keeps every n free
    // of duplicated f values at the domain edges
    std::string csv_c = "n,mle_var,b_fg,b_gcr,b_gbar\n";
    for (long nc : n_list) {
        const gsb::BinaryModel bm =
            gsb::BinaryModel::sine(d, gsb::uniform_grid_left(0.0, M_PI, static_cast<int>(nc)));
        const std::vector<gsb::RepetitionDiag> diag = gsb::obs1_diag(bm, {m_fixed});
        const gsb::VarianceEstimate var = gsb::binary_mle_variance(bm, m_fixed);
        csv_c += std::to_string(nc) + "," + gsb::format_full(var.value) + "," +
                 gsb::format_full(diag[0].bound_fg) + "," + gsb::format_full(diag[0].bound_gcr) + "," +
                 gsb::format_full(diag[0].bound_gbar) + "\n";
    }
    gsb::write_text_file(args.out_path + "_c.csv", csv_c);
    std::cout << "wrote " << args.out_path << "_ab.csv and " << args.out_path << "_c.csv\n";
    return 0;
}

int cmd_fig2(const CommonArgs& args) {
    const json cfg = load_config(args);
    gsb::BayesKernelConfig bk;
    bk.d = cfg_num(cfg, "d", 0.5);
    bk.sigma_p = cfg_num(cfg, "sigma_p", 5.0);
    bk.quad.points = static_cast<int>(cfg_num(cfg, "points", 2001));
    bk.quad.half_width_multiplier = cfg_num(cfg, "half_width_multiplier", 8.0);

    std::vector<double> grid = cfg_vec(cfg, "eps_grid", {});
    if (grid.empty())
        grid = gsb::logspace_grid(cfg_num(cfg, "eps_lo", 1e-3), cfg_num(cfg, "eps_hi", 20.0),
                                  static_cast<int>(cfg_num(cfg, "eps_count", 41)));

    const gsb::BayesCurve curve = gsb::sweep(bk, grid);
    std::string csv = "eps,bound,vantrees_ref\n";
    for (std::size_t k = 0; k < curve.eps_grid.size(); ++k)
        csv += gsb::format_full(curve.eps_grid[k]) + "," + gsb::format_full(curve.bounds[k]) + "," +
               gsb::format_full(curve.vantrees) + "\n";
    double max_bound = curve.bounds.front();
    for (double b : curve.bounds) max_bound = std::max(max_bound, b);
    csv += "# argmax_eps=" + gsb::format_full(curve.argmax_eps) +
           ",max_bound=" + gsb::format_full(max_bound) + "\n";
    gsb::write_text_file(args.out_path, csv);
    std::cout << "argmax_eps=" << gsb::format_full(curve.argmax_eps)
              << " max_bound=" << gsb::format_full(max_bound)
              << " vantrees=" << gsb::format_full(curve.vantrees) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"global-score precision bounds for classical and quantum estimation"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string estimator_flag;
    auto add_common = [&](CLI::App* sub, bool out_required = true) {
        sub->add_option("--config", args.config_path, "JSON config file");
        auto* out = sub->add_option("--out", args.out_path, "output path");
        if (out_required) out->required();
        sub->add_option("--seed", args.seed, "RNG seed recorded in provenance");
        sub->add_option("--override", args.overrides, "key=value config override (repeatable)");
    };

    CLI::App* classical = app.add_subcommand("classical", "classical bound report for a discrete model");
    add_common(classical);
    classical->add_option("--estimator", estimator_flag, "estimator choice (mle)");

    CLI::App* quantum = app.add_subcommand("quantum", "quantum bound report for a state family");
    add_common(quantum);
    CLI::App* povm = app.add_subcommand("povm", "optimal measurement construction and cross-checks");
    add_common(povm);
    CLI::App* fig1 = app.add_subcommand("fig1", "classical hierarchy sweeps (CSV panels)");
    add_common(fig1);
    CLI::App* fig2 = app.add_subcommand("fig2", "Bayesian kernel-width sweep (CSV)");
    add_common(fig2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (!estimator_flag.empty()) args.overrides.push_back("estimator=" + estimator_flag);
        if (classical->parsed()) return cmd_classical(args);
        if (quantum->parsed()) return cmd_quantum(args);
        if (povm->parsed()) return cmd_povm(args);
        if (fig1->parsed()) return cmd_fig1(args);
        if (fig2->parsed()) return cmd_fig2(args);
    } catch (const gsb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
