#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "pluripot/core.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
    static fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("pluripot_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string err;
    fs::path out;
};

Run run(const std::string& command, const std::string& config, const std::string& name, const std::string& extra = "") {
    auto dir = scratch() / name;
    fs::create_directories(dir);
    auto cfg = dir / "config.json";
    std::ofstream(cfg, std::ios::binary) << config;
    auto out = dir / "out";
    auto err = dir / "stderr.txt";
    std::string cmd = std::string(PLURIPOT_CLI_PATH) + " " + command + " --config " + cfg.string() + " --out " + out.string() + " " +
                      extra + " 2> " + err.string();
    int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err), out};
}

json body(const fs::path& p) { return json::parse(slurp(p)); }

int lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("solve-ma with the FS measure returns the reference") {
    auto r = run("solve-ma", R"({"model": {"M": 1024}, "measure": {"kind": "fs"}})", "fs");
    REQUIRE(r.code == 0);
    auto m = pluripot::make_model(1, 1, 20, 1024);
    auto p = pluripot::parse_potential(m, slurp(r.out / "potential.txt"));
    double worst = 0;
    for (std::size_t i = 0; i < m->size(); ++i) worst = std::max(worst, std::abs(p[i] - m->reference[i]));
    CHECK(worst < 1e-10);
    for (auto f : {"potential.txt", "residual.csv"}) {
        auto text = slurp(r.out / f);
        CHECK(text.rfind("# pluripot v1 ", 0) == 0);
        auto hdr = text.find("# pluripot v1 solve-ma config_hash=");
        CHECK(hdr <= text.find('\n') + 1);
        CHECK(text.find("M=1024 T=20") < text.find('\n', hdr));
    }
    auto e = body(r.out / "energy.json");
    CHECK(e["header"]["grid"] == "n=1 degree=1 M=1024 T=20");
    CHECK(e.contains("E"));
}

TEST_CASE("solve-ma with a Gaussian") {
    auto r = run("solve-ma", R"({"measure": {"kind": "gaussian", "mean": 0, "sd": 1}})", "gauss");
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(r.out / "residual.csv"));
    std::string line, last;
    while (std::getline(csv, line))
        if (!line.empty()) last = line;
    auto c1 = last.find(','), c2 = last.find(',', c1 + 1), c3 = last.find(',', c2 + 1);
    CHECK(std::stod(last.substr(c2 + 1, c3 - c2 - 1)) < 1e-6);
}

TEST_CASE("config errors exit 1 with one diagnostic line") {
    struct Case {
        const char* cmd;
        const char* cfg;
    };
    for (auto [cmd, cfg] : {Case{"solve-ma", "{\"measure\": {\"kind\": \"fs\""}, Case{"solve-ma", R"({"measure": {"kind": "fs"}, "bogus": 1})"},
                            Case{"solve-ma", R"({"measure": {"kind": "gaussian", "mean": 0}})"},
                            Case{"balanced", R"({"measure": {"kind": "fs"}, "k_list": []})"},
                            Case{"balanced", R"({"measure": {"kind": "fs"}, "k_list": [4, 2]})"},
                            Case{"balanced", R"({"setting": "S_plus", "k_list": [2]})"},
                            Case{"capacity", R"({"K": {"kind": "disk", "R": 1, "extra": 0}})"}}) {
        auto r = run(cmd, cfg, "bad");
        CHECK(r.code == 1);
        CHECK(lines(r.err) == 1);
    }
}

TEST_CASE("balanced sweep for the FS volume") {
    auto r = run("balanced", R"({"measure": {"kind": "fs"}, "k_list": [2, 4, 8]})", "bal");
    REQUIRE(r.code == 0);
    auto s = body(r.out / "sweep.json");
    REQUIRE(s["sweep"].size() == 3);
    for (auto& row : s["sweep"]) {
        CHECK(row["sup_gap_to_limit"].get<double>() <= 1e-8);
        CHECK(row["N_k"].get<int>() == row["k"].get<int>() + 1);
    }
    for (int k : {2, 4, 8}) {
        auto t = slurp(r.out / ("trace_k" + std::to_string(k) + ".csv"));
        CHECK(t.rfind("# pluripot v1 balanced", 0) == 0);
        CHECK(t.find("\niter,F_k,J_k,fp_gap\n") != std::string::npos);
    }
}

TEST_CASE("capacity of the unit disk") {
    auto r = run("capacity", R"({"K": {"kind": "disk", "R": 1}})", "cap");
    REQUIRE(r.code == 0);
    auto c = body(r.out / "capacity.json");
    CHECK(std::abs(c["T_alex"].get<double>() - std::sqrt(0.5)) < 1e-4);
}

TEST_CASE("logarithmic energy of the FS volume") {
    auto r = run("logenergy", R"({"lambda": {"kind": "fs"}})", "log");
    REQUIRE(r.code == 0);
    CHECK(std::abs(body(r.out / "logenergy.json")["I"].get<double>() + 0.5) < 1e-4);
    CHECK(slurp(r.out / "potential.csv").find("\nt,U\n") != std::string::npos);
}

TEST_CASE("report and ke") {
    auto r = run("report", "{}", "report");
    CHECK(r.code == 0);
    CHECK(body(r.out / "report.json")["verdict"] == "pass");
    auto k = run("ke", R"({"model": {"degree": 2, "M": 512}})", "ke");
    CHECK(k.code == 0);
    CHECK(body(k.out / "ke.json")["residual"].get<double>() < 1e-8);
}

TEST_CASE("reruns are byte identical") {
    const std::string cfg = R"({"model": {"M": 512}, "measure": {"kind": "bump", "center": 0.5, "width": 4}})";
    auto a = run("solve-ma", cfg, "rep_a", "--seed 3"), b = run("solve-ma", cfg, "rep_b", "--seed 3");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    for (auto f : {"potential.txt", "residual.csv", "energy.json"}) CHECK(slurp(a.out / f) == slurp(b.out / f));
    CHECK(slurp(a.out / "potential.txt").find("seed=3") != std::string::npos);
    auto r = run("report", R"({"pairs": 5})", "rep_r1", "--seed 9"), s = run("report", R"({"pairs": 5})", "rep_r2", "--seed 9");
    CHECK(slurp(r.out / "report.json") == slurp(s.out / "report.json"));
}
