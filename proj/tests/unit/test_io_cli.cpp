#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "gsb/io.hpp"

using namespace gsb;

namespace {

std::string temp_path(const std::string& name) { return "/tmp/gsb_test_" + name; }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GSB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

// d sin(theta) binary model on {0, pi/2} as computed in floating point
// (the derivative at the second point is cos(pi/2)/2, tiny but nonzero)
const char* kBinaryModelJson = R"({
  "outcomes": ["+1", "-1"],
  "params": [0.0, 1.5707963267948966],
  "probs": [[0.5, 0.5], [0.75, 0.25]],
  "derivs": [[0.25, -0.25], [3.061616997868383e-17, -3.061616997868383e-17]],
  "weights": [0.5, 0.5]
})";

}  // namespace

TEST_CASE("discrete model JSON round trip and validation") {
    const DiscreteModel m = discrete_model_from_json(json::parse(kBinaryModelJson));
    CHECK(m.n() == 2);
    CHECK(m.probs[1][0] == 0.75);

    // malformed probabilities name the offending row
    json bad = json::parse(kBinaryModelJson);
    bad["probs"][1] = {0.7, 0.2};
    try {
        discrete_model_from_json(bad);
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.code() == "invalid-model");
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }

    // derivatives fall back to grid differences when absent
    json nod = json::parse(kBinaryModelJson);
    nod.erase("derivs");
    const DiscreteModel md = discrete_model_from_json(nod);
    const double slope = (0.75 - 0.5) / (M_PI / 2);
    CHECK(md.derivs[0][0] == Catch::Approx(slope));
    CHECK(md.derivs[1][0] == Catch::Approx(slope));
}

TEST_CASE("state family JSON loading") {
    json fam;
    fam["dim"] = 2;
    fam["params"] = {0.0, M_PI / 4};
    fam["weights"] = {0.5, 0.5};
    fam["state_generator"] = {{"name", "planar_qubit"}, {"d", 0.5}};
    const StateFamily loaded = state_family_from_json(fam);
    loaded.validate();
    const StateFamily direct = StateFamily::planar_qubit(0.5, {0.0, M_PI / 4});
    for (int i = 0; i < 2; ++i) {
        CHECK((loaded.states[static_cast<std::size_t>(i)] - direct.states[static_cast<std::size_t>(i)]).frob() <= 1e-12);
        // finite-difference derivatives against the analytic ones
        CHECK((loaded.dstates[static_cast<std::size_t>(i)] - direct.dstates[static_cast<std::size_t>(i)]).frob() <= 1e-8);
    }

    // explicit matrices
    json fam2;
    fam2["dim"] = 2;
    fam2["params"] = {0.0};
    fam2["weights"] = {1.0};
    fam2["states"] = {detail::herm_to_json(direct.states[0])};
    fam2["dstates"] = {detail::herm_to_json(direct.dstates[0])};
    const StateFamily loaded2 = state_family_from_json(fam2);
    CHECK((loaded2.states[0] - direct.states[0]).frob() <= 1e-15);

    json missing = fam2;
    missing.erase("dstates");
    CHECK_THROWS_AS(state_family_from_json(missing), Error);
}

TEST_CASE("cli classical command") {
    const std::string model_path = temp_path("model.json");
    const std::string out_path = temp_path("classical.json");
    write_file(model_path, kBinaryModelJson);

    const std::string cfg_path = temp_path("classical_cfg.json");
    write_file(cfg_path, "{\"model\": \"" + model_path + "\", \"estimator\": \"mle\"}");
    REQUIRE(run_cli("classical --config " + cfg_path + " --out " + out_path) == 0);

    const json doc = json::parse(read_file(out_path));
    CHECK(doc.at("bounds").at("fg").get<double>() == Catch::Approx(0.53974399).epsilon(1e-6));
    CHECK(doc.at("bounds").at("gcr").get<double>() ==
          Catch::Approx(doc.at("bounds").at("fg").get<double>()).epsilon(1e-10));
    CHECK(doc.at("diagnostics").at("saturation").at("saturated").get<bool>());
    CHECK(doc.at("bounds").at("fg").get<double>() >= doc.at("bounds").at("gbar").get<double>());
    CHECK(doc.at("provenance").at("version").get<std::string>() == std::string(kVersion));
    // provenance round-trips the effective config
    CHECK(doc.at("provenance").at("config").at("model").get<std::string>() == model_path);

    // malformed probabilities: exit 2
    const std::string bad_path = temp_path("bad_model.json");
    json bad = json::parse(kBinaryModelJson);
    bad["probs"][0] = {0.45, 0.45};
    write_file(bad_path, bad.dump());
    write_file(cfg_path, "{\"model\": \"" + bad_path + "\"}");
    CHECK(run_cli("classical --config " + cfg_path + " --out " + out_path) == 2);

    // n = 1 model: single-point report
    json single;
    single["outcomes"] = {"+1", "-1"};
    single["params"] = {0.4};
    single["probs"] = {{0.6, 0.4}};
    single["derivs"] = {{0.25, -0.25}};
    single["weights"] = {1.0};
    const std::string single_path = temp_path("single.json");
    write_file(single_path, single.dump());
    write_file(cfg_path, "{\"model\": \"" + single_path + "\"}");
    REQUIRE(run_cli("classical --config " + cfg_path + " --out " + out_path) == 0);
    const json sdoc = json::parse(read_file(out_path));
    CHECK(sdoc.at("bounds").at("fg").get<double>() >= 0.0);
}

TEST_CASE("cli quantum and povm commands reproduce the worked example") {
    const std::string out_path = temp_path("quantum.json");
    REQUIRE(run_cli("quantum --out " + out_path) == 0);
    const json doc = json::parse(read_file(out_path));
    CHECK(doc.at("bounds").at("gcr").get<double>() == Catch::Approx(3.0).epsilon(1e-9));
    CHECK(doc.at("bounds").at("fg").get<double>() == Catch::Approx(3.75).epsilon(1e-9));
    CHECK(doc.at("bounds").at("gbar").get<double>() == Catch::Approx(360.0 / 97.0).epsilon(1e-9));
    CHECK(doc.at("diagnostics").at("compat").at("holds").get<bool>());

    const std::string povm_path = temp_path("povm.json");
    REQUIRE(run_cli("povm --out " + povm_path) == 0);
    const json pdoc = json::parse(read_file(povm_path));
    CHECK(pdoc.at("induced_bounds").at("fg").get<double>() == Catch::Approx(3.75).epsilon(1e-8));
    CHECK(pdoc.at("optimality").at("optimal").get<bool>());
    CHECK(pdoc.at("povm").size() == 2);

    // degenerate bias: exit 3
    CHECK(run_cli("povm --out " + povm_path + " --override bias=0,0") == 3);
}

TEST_CASE("cli povm rejects an incompatible family with exit 3") {
    // random-looking 3-level family whose generalized SLDs leave the score span
    StateFamily fam;
    fam.dim = 3;
    fam.params = {0.0, 1.0};
    fam.weights = {0.5, 0.5};
    for (int i = 0; i < 2; ++i) {
        HermMatrix rho(3);
        rho.set(0, 0, 0.5 + 0.1 * i);
        rho.set(1, 1, 0.3);
        rho.set(2, 2, 0.2 - 0.1 * i);
        rho.set(0, 1, cplx(0.05, 0.02 * (i + 1)));
        HermMatrix drho(3);
        drho.set(0, 0, 0.1);
        drho.set(1, 1, -0.1);
        drho.set(0, 2, cplx(0.2, 0.1 * (1 - i)));
        fam.states.push_back(rho);
        fam.dstates.push_back(drho);
    }
    fam.validate();
    REQUIRE_FALSE(compat_check(fam, ScoreOperators::local(fam)).holds);

    json doc;
    doc["dim"] = 3;
    doc["params"] = fam.params;
    doc["weights"] = fam.weights;
    doc["states"] = {detail::herm_to_json(fam.states[0]), detail::herm_to_json(fam.states[1])};
    doc["dstates"] = {detail::herm_to_json(fam.dstates[0]), detail::herm_to_json(fam.dstates[1])};
    const std::string fam_path = temp_path("family3.json");
    write_file(fam_path, doc.dump());
    const std::string cfg_path = temp_path("family3_cfg.json");
    write_file(cfg_path, "{\"family\": \"" + fam_path + "\", \"bias\": [1.0, 0.5]}");
    CHECK(run_cli("povm --config " + cfg_path + " --out " + temp_path("family3_out.json")) == 3);
    // the bound report itself is still well defined
    CHECK(run_cli("quantum --config " + cfg_path + " --out " + temp_path("family3_q.json")) == 0);
}

TEST_CASE("cli figure commands are deterministic") {
    const std::string prefix = temp_path("fig1");
    REQUIRE(run_cli("fig1 --out " + prefix + " --override m_list=1,2,5,10") == 0);
    const std::string ab1 = read_file(prefix + "_ab.csv");
    const std::string c1 = read_file(prefix + "_c.csv");
    CHECK(ab1.rfind("m,b_fg,b_gcr,b_gbar,ratio\n", 0) == 0);
    CHECK(c1.rfind("n,mle_var,b_fg,b_gcr,b_gbar\n", 0) == 0);

    REQUIRE(run_cli("fig1 --out " + prefix + " --override m_list=1,2,5,10") == 0);
    CHECK(read_file(prefix + "_ab.csv") == ab1);  // byte-identical rerun
    CHECK(read_file(prefix + "_c.csv") == c1);

    // m = 1 row: ratio exactly 1 up to roundoff
    std::stringstream ss(ab1);
    std::string line;
    std::getline(ss, line);  // header
    std::getline(ss, line);
    const double ratio1 = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(ratio1 == Catch::Approx(1.0).margin(1e-10));

    const std::string fig2_path = temp_path("fig2.csv");
    REQUIRE(run_cli("fig2 --out " + fig2_path + " --override eps_count=11") == 0);
    const std::string f2 = read_file(fig2_path);
    CHECK(f2.rfind("eps,bound,vantrees_ref\n", 0) == 0);
    CHECK(f2.find("# argmax_eps=") != std::string::npos);
    REQUIRE(run_cli("fig2 --out " + fig2_path + " --override eps_count=11") == 0);
    CHECK(read_file(fig2_path) == f2);
}
