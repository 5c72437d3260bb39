#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "spbvp/cli.hpp"

using namespace spbvp;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

fs::path temp_file(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / ("spbvp_cli_" + name);
    std::ofstream(p) << content;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("mesh subcommand") {
    const Result r = run({"mesh", "--family", "shishkin", "--eps", "1e-4", "-N", "16", "--mu", "2"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    CHECK(ls[0] == "i,x_i,h_i");
    CHECK(ls[1] == "0,0,");
    CHECK(ls[17].rfind("16,1,", 0) == 0);
    std::size_t comments = 0;
    for (std::size_t i = 18; i < ls.size(); ++i) comments += ls[i].rfind("# ", 0) == 0 ? 1 : 0;
    CHECK(comments == ls.size() - 18);
    CHECK(r.out.find("# cells=16") != std::string::npos);
    CHECK(r.out.find("# quality=") != std::string::npos);

    SUBCASE("every family") {
        for (const std::string& fam : mesh_family_names()) {
            const std::string n = fam == "system_shishkin" ? "12" : "16";
            const Result m = run({"mesh", "--family", fam, "--eps", "1e-5", "-N", n});
            CHECK_MESSAGE(m.code == 0, fam << ": " << m.err);
        }
    }
    SUBCASE("bakhvalov reports tau") {
        const Result m = run({"mesh", "--family", "bakhvalov", "--eps", "1e-4", "--mu", "2", "-N", "64"});
        CHECK(m.out.find("# tau=0.4998998093") != std::string::npos);
    }
    SUBCASE("errors") {
        CHECK(run({"mesh", "--family", "nope"}).code == cli::kExitFailure);
        CHECK(run({"mesh", "--eps", "-1"}).code == cli::kExitFailure);
        CHECK(run({"mesh", "--bogus"}).code != 0);
    }
}

TEST_CASE("solve subcommand") {
    const Result r = run({"solve", "--problem", "scalar_cd", "--eps", "1e-3", "--family", "shishkin", "-N", "32"});
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    CHECK(ls.size() == 34);
    CHECK(ls[0] == "x,u_1");
    CHECK(ls[1] == "0,0");
    CHECK(ls[33] == "1,0");
    const Result s = run({"solve", "--problem", "weakly_coupled", "--eps", "1e-4", "--family", "system_shishkin", "-N",
                          "30", "--n-ref", "60"});
    REQUIRE(s.code == 0);
    CHECK(lines(s.out)[0] == "x,u_1,u_2");

    SUBCASE("inline problem document") {
        const auto p = temp_file("solve.json", R"({"kind":"weakly_coupled","eps":[0.01],"B":[[1]],"A":[[0]],"f":[1]})");
        const Result j = run({"solve", "--problem-json", p.string(), "--family", "uniform", "-N", "8", "--scheme",
                              "central"});
        CHECK(j.code == 0);
        CHECK(lines(j.out).size() == 10);
    }
    SUBCASE("scheme errors") {
        CHECK(run({"solve", "--scheme", "spectral"}).code == cli::kExitFailure);
        const Result ias = run({"solve", "--scheme", "ias", "--family", "shishkin"});
        CHECK(ias.code == cli::kExitFailure);
        CHECK(ias.err.find("uniform") != std::string::npos);
    }
}

TEST_CASE("check subcommand") {
    const auto good = temp_file("good.json", R"({"kind":"reaction_diffusion","eps":[1e-3,1e-2],
        "A":[[2,-0.25],[-0.25,2]],"f":[1,2]})");
    const Result r = run({"check", good.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["gamma"]["inverse_nonnegative"] == true);
    CHECK(j["zeta"].get<double>() == doctest::Approx(0.125));
    CHECK(j["kappa"].get<double>() == doctest::Approx(std::sqrt(1.75)));

    const auto bad = temp_file("bad.json", R"({"kind":"reaction_diffusion","eps":[1e-3,1e-2],"A":[[1,2],[2,1]]})");
    const auto jb = nlohmann::json::parse(run({"check", bad.string()}).out);
    CHECK(jb["gamma"]["inverse_nonnegative"] == false);
    CHECK(jb["gamma"]["min_inverse_entry"].get<double>() == doctest::Approx(-2.0 / 3.0));

    const auto conv = temp_file("conv.json", R"({"kind":"strongly_coupled","eps":[1e-3,1e-3],
        "B":[[2,0.5],[0.25,4]],"A":[[0,0.1],[0.1,0]]})");
    const auto jc = nlohmann::json::parse(run({"check", conv.string(), "--C", "0.5", "0.25"}).out);
    CHECK(jc["upsilon"]["matrix"][0][1].get<double>() == doctest::Approx(-0.3));
    CHECK(jc["upsilon_constants"].size() == 2);

    const auto builtin = temp_file("builtin.json", R"({"builtin":"strongly_coupled","eps":0.01})");
    CHECK(run({"check", builtin.string()}).code == 0);

    CHECK(run({"check", "/nonexistent/problem.json"}).code == cli::kExitConfigError);
    const auto malformed = temp_file("malformed.json", "{not json");
    CHECK(run({"check", malformed.string()}).code == cli::kExitConfigError);
    const auto shape = temp_file("shape.json", R"({"kind":"weakly_coupled","eps":[1e-3,1e-2],"A":[[1]]})");
    CHECK(run({"check", shape.string()}).code == cli::kExitConfigError);
}

TEST_CASE("study subcommand") {
    const fs::path csv = fs::temp_directory_path() / "spbvp_cli_study.csv";
    const fs::path json = fs::temp_directory_path() / "spbvp_cli_study.json";
    const std::string base = R"("problem":"scalar_cd","scheme":"upwind","mesh":"shishkin","N_list":[16,32,64],
                                "eps_list":[1e-2,1e-6])";
    SUBCASE("success and determinism") {
        const auto cfg = temp_file("study.json", "{" + base + ",\"output\":\"" + csv.string() + "\"}");
        REQUIRE(run({"study", cfg.string()}).code == cli::kExitOk);
        const std::string first = slurp(csv);
        REQUIRE(run({"study", cfg.string()}).code == cli::kExitOk);
        CHECK(slurp(csv) == first);
        CHECK(first == slurp(fs::path(SPBVP_TEST_DATA_DIR) / "golden_scalar_cd_shishkin_upwind.csv"));
    }
    SUBCASE("json output chosen by extension") {
        const auto cfg = temp_file("study_json.json", "{" + base + ",\"output\":\"" + json.string() + "\"}");
        REQUIRE(run({"study", cfg.string()}).code == cli::kExitOk);
        const auto j = nlohmann::json::parse(slurp(json));
        CHECK(j["records"].size() == 6);
        CHECK(j["uniform"].size() == 3);
    }
    SUBCASE("stdout when no output is given") {
        const auto cfg = temp_file("study_stdout.json", "{" + base + "}");
        const Result r = run({"study", cfg.string(), "--format", "json"});
        CHECK(r.code == cli::kExitOk);
        CHECK(nlohmann::json::parse(r.out)["failures"] == 0);
    }
    SUBCASE("cell failure gives exit code 2") {
        const auto cfg = temp_file("study_fail.json", R"({"problem":"weakly_coupled","scheme":"upwind",
            "mesh":"system_shishkin","N_list":[30,32],"eps_list":[1e-4],"oracle_factor":4})");
        const Result r = run({"study", cfg.string()});
        CHECK(r.code == cli::kExitCellFailure);
        CHECK(r.err.find("N=32") != std::string::npos);
    }
    SUBCASE("config errors give exit code 3") {
        const std::vector<std::string> bad{
            R"({"problem":"scalar_cd","scheme":"upwind","mesh":"shishkin","N_list":[16]})",
            R"({"problem":"nope","scheme":"upwind","mesh":"shishkin","N_list":[16],"eps_list":[1e-2]})",
            R"({"problem":"scalar_cd","scheme":"nope","mesh":"shishkin","N_list":[16],"eps_list":[1e-2]})",
            R"({"problem":"scalar_cd","scheme":"upwind","mesh":"nope","N_list":[16],"eps_list":[1e-2]})",
            R"({"problem":"scalar_cd","scheme":"upwind","mesh":"shishkin","N_list":[],"eps_list":[1e-2]})",
            R"({"problem":"scalar_cd","scheme":"upwind","mesh":"shishkin","N_list":[16],"eps_list":[-1]})",
            R"({"problem":"scalar_cd","scheme":"upwind","mesh":"shishkin","N_list":"16","eps_list":[1e-2]})",
            R"([1,2])",
            "{truncated"};
        for (std::size_t i = 0; i < bad.size(); ++i) {
            const auto cfg = temp_file("bad" + std::to_string(i) + ".json", bad[i]);
            CHECK_MESSAGE(run({"study", cfg.string()}).code == cli::kExitConfigError, bad[i]);
        }
        CHECK(run({"study", "/nonexistent/config.json"}).code == cli::kExitConfigError);
    }
}

TEST_CASE("a subcommand is required") {
    CHECK(run({}).code != 0);
    CHECK(run({"frobnicate"}).code != 0);
    CHECK(run({"--help"}).code == 0);
}
