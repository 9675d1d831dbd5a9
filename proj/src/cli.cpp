#include "pluripot/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pluripot/balanced.hpp"
#include "pluripot/core.hpp"
#include "pluripot/electrostatics.hpp"
#include "pluripot/functionals.hpp"
#include "pluripot/measures.hpp"
#include "pluripot/solver.hpp"

namespace pluripot::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void allow(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get(const json& j, const char* key, T def, const std::string& where) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <class T>
T need(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    return get<T>(j, key, T{}, where);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

struct Context {
    json cfg;
    std::string command;
    std::uint64_t seed = 0;
    std::string hash;
    std::filesystem::path out;
    ModelPtr model;

    std::string header_line() const {
        char buf[256];
        std::snprintf(buf, sizeof buf, "# pluripot v1 %s config_hash=%s seed=%" PRIu64 " grid %s", command.c_str(), hash.c_str(), seed,
                      model->describe().c_str());
        return buf;
    }
    ojson header_json() const {
        ojson h;
        h["version"] = "pluripot v1";
        h["command"] = command;
        h["config_hash"] = hash;
        h["seed"] = seed;
        h["grid"] = model->describe();
        return h;
    }
    void write(const std::string& name, const std::string& text) const {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw Error(ErrorCode::io_error, "cannot write " + (out / name).string());
        f << text;
    }
    void write_json(const std::string& name, ojson body) const {
        ojson j;
        j["header"] = header_json();
        for (auto& [k, v] : body.items()) j[k] = v;
        write(name, j.dump(2) + "\n");
    }
};

ModelPtr model_from(const json& j) {
    const std::string w = "model";
    allow(j, w, {"n", "degree", "T", "M", "quadrature"});
    return make_model(get<int>(j, "n", 1, w), get<int>(j, "degree", 1, w), get<double>(j, "T", 20.0, w), get<int>(j, "M", 2048, w),
                      get<std::string>(j, "quadrature", "trapezoid", w));
}

enum class FsSampling { ma, pointwise };

MeasureField measure_from(const ModelPtr& m, const json& j, const std::string& w, FsSampling fs_default) {
    if (!j.is_object()) throw ConfigError(w + ": expected an object");
    auto kind = need<std::string>(j, "kind", w);
    if (kind == "fs") {
        allow(j, w, {"kind", "sampling"});
        auto s = get<std::string>(j, "sampling", fs_default == FsSampling::ma ? "ma" : "pointwise", w);
        if (s == "ma") return reference_ma(m);
        if (s == "pointwise") {
            if (m->n != 1) throw ConfigError(w + ": pointwise sampling needs n=1");
            return fs_volume_sampled(m);
        }
        throw ConfigError(w + ".sampling: expected 'ma' or 'pointwise'");
    }
    if (m->n != 1) throw ConfigError(w + ": only fs is available for n=2");
    if (kind == "gaussian") {
        allow(j, w, {"kind", "mean", "sd"});
        double sd = need<double>(j, "sd", w);
        if (!(sd > 0)) throw ConfigError(w + ".sd must be positive");
        return gaussian_measure(m, need<double>(j, "mean", w), sd);
    }
    if (kind == "bump") {
        allow(j, w, {"kind", "center", "width"});
        double width = need<double>(j, "width", w);
        if (!(width > 0)) throw ConfigError(w + ".width must be positive");
        return bump_measure(m, need<double>(j, "center", w), width);
    }
    if (kind == "mixture") {
        allow(j, w, {"kind", "parts"});
        if (!j.contains("parts") || !j["parts"].is_array() || j["parts"].empty())
            throw ConfigError(w + ".parts: expected a non-empty array");
        std::vector<std::pair<double, MeasureField>> parts;
        int q = 0;
        for (const auto& p : j["parts"]) {
            std::string pw = w + ".parts[" + std::to_string(q++) + "]";
            allow(p, pw, {"weight", "measure"});
            double wt = need<double>(p, "weight", pw);
            if (!(wt >= 0)) throw ConfigError(pw + ".weight must be non-negative");
            if (!p.contains("measure")) throw ConfigError(pw + ": missing 'measure'");
            parts.emplace_back(wt, measure_from(m, p["measure"], pw + ".measure", fs_default));
        }
        return mixture(parts);
    }
    throw ConfigError(w + ".kind: unknown measure kind '" + kind + "'");
}

SolveOptions solver_from(const json& cfg) {
    SolveOptions o;
    if (!cfg.contains("solver")) return o;
    const auto& j = cfg["solver"];
    const std::string w = "solver";
    allow(j, w, {"max_iter", "tol_residual", "step0", "shrink", "max_tries", "force_ascent"});
    o.max_iter = get<int>(j, "max_iter", o.max_iter, w);
    o.tol_residual = get<double>(j, "tol_residual", o.tol_residual, w);
    o.step0 = get<double>(j, "step0", o.step0, w);
    o.shrink = get<double>(j, "shrink", o.shrink, w);
    o.max_tries = get<int>(j, "max_tries", o.max_tries, w);
    o.force_ascent = get<bool>(j, "force_ascent", o.force_ascent, w);
    try {
        o.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
    return o;
}

BalancedOptions balanced_opts_from(const json& cfg) {
    BalancedOptions o;
    if (!cfg.contains("balanced")) return o;
    const auto& j = cfg["balanced"];
    allow(j, "balanced", {"max_iter", "tol_fp", "fallback_iter"});
    o.max_iter = get<int>(j, "max_iter", o.max_iter, "balanced");
    o.tol_fp = get<double>(j, "tol_fp", o.tol_fp, "balanced");
    o.fallback_iter = get<int>(j, "fallback_iter", o.fallback_iter, "balanced");
    if (o.max_iter < 0 || !(o.tol_fp > 0) || o.fallback_iter < 0) throw ConfigError("balanced: invalid options");
    return o;
}

double gap_up_to_constant(const Potential& a, const Potential& b) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < a.size(); ++i) {
        lo = std::min(lo, a[i] - b[i]);
        hi = std::max(hi, a[i] - b[i]);
    }
    return 0.5 * (hi - lo);
}

int cmd_solve_ma(Context& c) {
    allow(c.cfg, "config", {"model", "measure", "solver"});
    if (!c.cfg.contains("measure")) throw ConfigError("config: missing 'measure'");
    auto mu = measure_from(c.model, c.cfg["measure"], "measure", FsSampling::ma);
    auto opts = solver_from(c.cfg);
    opts.seed = c.seed;
    auto r = solve_ma(c.model, mu, opts);
    c.write("potential.txt", serialize(r.psi, c.header_line()));
    c.write("residual.csv", r.trace.to_csv(c.header_line()));
    auto rep = energy_report(c.model, r.psi, &mu);
    c.write_json("energy.json", ojson::parse(rep.to_json()));
    return ok;
}

int cmd_ke(Context& c) {
    allow(c.cfg, "config", {"model", "solver"});
    auto opts = solver_from(c.cfg);
    opts.seed = c.seed;
    auto r = solve_ke_fano(c.model, opts);
    c.write("potential.txt", serialize(r.psi, c.header_line()));
    c.write("trace.csv", r.trace.to_csv(c.header_line()));
    ojson b;
    b["c"] = r.c;
    b["residual"] = r.residual;
    b["F_minus"] = r.F_minus;
    b["sup_gap_to_fs"] = gap_up_to_constant(r.psi, Potential::reference(c.model));
    c.write_json("ke.json", b);
    return ok;
}

int cmd_balanced(Context& c) {
    allow(c.cfg, "config", {"model", "measure", "setting", "k_list", "balanced", "solver"});
    if (!c.cfg.contains("k_list") || !c.cfg["k_list"].is_array()) throw ConfigError("config: missing 'k_list' array");
    std::vector<int> ks;
    for (const auto& k : c.cfg["k_list"]) {
        if (!k.is_number_integer() || k.get<int>() < 1) throw ConfigError("k_list: expected positive integers");
        ks.push_back(k.get<int>());
    }
    if (ks.empty()) throw ConfigError("k_list: empty");
    if (!std::is_sorted(ks.begin(), ks.end())) throw ConfigError("k_list: not sorted ascending");
    Setting s;
    try {
        s = parse_setting(get<std::string>(c.cfg, "setting", "S_mu", "config"));
    } catch (const Error& e) {
        throw ConfigError(std::string("setting: ") + e.what());
    }
    std::optional<MeasureField> mu;
    if (s == Setting::S_mu) {
        if (!c.cfg.contains("measure")) throw ConfigError("config: S_mu needs 'measure'");
        mu = measure_from(c.model, c.cfg["measure"], "measure", FsSampling::pointwise);
    } else if (c.cfg.contains("measure")) {
        throw ConfigError("config: 'measure' is only read in S_mu");
    }
    if (c.model->n != 1) throw ConfigError("model: balanced sweeps need n=1");
    auto bopts = balanced_opts_from(c.cfg);
    auto sopts = solver_from(c.cfg);
    sopts.seed = c.seed;
    // the FS volume is solved exactly by the reference; the sampled density only approximates it
    bool fs_input = s == Setting::S_mu && c.cfg["measure"].value("kind", "") == "fs";
    Potential limit = fs_input              ? Potential::reference(c.model)
                      : s == Setting::S_mu ? solve_ma(c.model, *mu, sopts).psi
                                           : solve_ke_fano(c.model, sopts).psi;
    auto limit_ma = monge_ampere(c.model, limit);
    const MeasureField* mup = mu ? &*mu : nullptr;
    ojson rows = ojson::array();
    int status = ok;
    for (int k : ks) {
        auto basis = make_basis(k, c.model->degree);
        char name[64];
        std::snprintf(name, sizeof name, "trace_k%d.csv", k);
        ojson row;
        row["k"] = k;
        row["N_k"] = basis.N;
        try {
            auto r = balanced_solve(s, c.model, basis, mup, bopts);
            c.write(name, r.trace.to_csv(c.header_line() + " k=" + std::to_string(k) + " method=" + r.trace.method));
            row["F_k_at_fixed_point"] = r.trace.records.back().F_k;
            row["sup_gap_to_limit"] = gap_up_to_constant(r.phi, limit);
            row["l1_gap_of_MA"] = residual_l1(monge_ampere(c.model, r.phi), limit_ma);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::no_convergence) throw;
            row["F_k_at_fixed_point"] = nullptr;
            row["sup_gap_to_limit"] = nullptr;
            row["l1_gap_of_MA"] = nullptr;
            status = no_convergence;
        }
        rows.push_back(row);
    }
    ojson b;
    b["setting"] = s == Setting::S_mu ? "S_mu" : "S_minus";
    b["sweep"] = rows;
    c.write_json("sweep.json", b);
    return status;
}

WeightedCompact compact_from(const ModelPtr& m, const json& cfg) {
    if (!cfg.contains("K")) throw ConfigError("config: missing 'K'");
    const auto& j = cfg["K"];
    auto kind = need<std::string>(j, "kind", "K");
    WeightedCompact kv;
    if (kind == "disk") {
        allow(j, "K", {"kind", "R"});
        double R = need<double>(j, "R", "K");
        if (!(R > 0)) throw ConfigError("K.R must be positive");
        kv = disk(m, R);
    } else if (kind == "annulus") {
        allow(j, "K", {"kind", "r_in", "r_out"});
        double a = need<double>(j, "r_in", "K"), b = need<double>(j, "r_out", "K");
        if (!(a > 0 && b > a)) throw ConfigError("K: need 0 < r_in < r_out");
        kv = annulus(m, a, b);
    } else if (kind == "window") {
        allow(j, "K", {"kind"});
        kv = whole_window(m);
    } else {
        throw ConfigError("K.kind: unknown '" + kind + "'");
    }
    if (cfg.contains("v")) {
        const auto& v = cfg["v"];
        auto vk = need<std::string>(v, "kind", "v");
        if (vk == "zero") {
            allow(v, "v", {"kind"});
        } else if (vk == "constant") {
            allow(v, "v", {"kind", "value"});
            double x = need<double>(v, "value", "v");
            for (auto& e : kv.v) e = x;
            char buf[64];
            std::snprintf(buf, sizeof buf, "constant %.17g", x);
            kv.v_descriptor = buf;
        } else {
            throw ConfigError("v.kind: unknown '" + vk + "'");
        }
    }
    return kv;
}

int cmd_capacity(Context& c) {
    allow(c.cfg, "config", {"model", "K", "v"});
    auto kv = compact_from(c.model, c.cfg);
    auto rep = capacity_report(c.model, kv);
    c.write_json("capacity.json", ojson::parse(rep.to_json()));
    return ok;
}

int cmd_logenergy(Context& c) {
    allow(c.cfg, "config", {"model", "lambda", "minus"});
    if (c.model->n != 1) throw ConfigError("model: logarithmic energy needs n=1");
    if (!c.cfg.contains("lambda")) throw ConfigError("config: missing 'lambda'");
    auto pos = measure_from(c.model, c.cfg["lambda"], "lambda", FsSampling::pointwise);
    SignedRadialMeasure lam = c.cfg.contains("minus")
                                  ? SignedRadialMeasure(pos, measure_from(c.model, c.cfg["minus"], "minus", FsSampling::pointwise))
                                  : SignedRadialMeasure(pos);
    double I = log_energy(lam);
    auto U = log_potential_nodes(lam);
    std::string csv = c.header_line() + "\nt,U\n";
    char buf[96];
    for (std::size_t i = 0; i < U.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.model->grid[i], U[i]);
        csv += buf;
    }
    c.write("potential.csv", csv);
    ojson b;
    b["I"] = I;
    c.write_json("logenergy.json", b);
    return ok;
}

struct Suite {
    std::string name;
    int checks = 0, violations = 0;
    double worst = 0;
    void check(double slack) {
        ++checks;
        if (slack < -tol.tol_mass) ++violations;
        worst = std::min(worst, slack);
    }
};

int cmd_report(Context& c) {
    allow(c.cfg, "config", {"model", "pairs"});
    int pairs = get<int>(c.cfg, "pairs", 50, "config");
    if (pairs < 1) throw ConfigError("pairs must be positive");
    const auto& m = c.model;
    const double n = m->n;
    std::mt19937_64 rng(c.seed);
    Suite compare{"compare"}, quasisym{"quasisym"}, enc{"enc11"}, chain{"monotone_chain"}, cocycle{"cocycle"};
    for (int q = 0; q < pairs; ++q) {
        auto phi = random_potential(m, rng), psi = random_potential(m, rng);
        double I = functional_I(m, phi, psi);
        double J = functional_J(m, psi, phi), Jr = functional_J(m, phi, psi);
        compare.check(I - J);
        compare.check((n + 1) * J - I);
        quasisym.check(Jr - J / n);
        quasisym.check(n * J - Jr);
        for (int s = 1; s <= 9; ++s) {
            double t = 0.1 * s;
            std::vector<double> v(phi.size());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = t * phi[i] + (1 - t) * psi[i];
            enc.check(n * t * t * I - functional_I(m, Potential(m, v), psi));
        }
        auto p = monotone_chain(m, phi, psi);
        for (std::size_t j = 1; j < p.size(); ++j) chain.check(p[j] - p[j - 1]);
        double e = energy_cocycle(m, phi, psi) - (energy(m, phi) - energy(m, psi));
        cocycle.check(-std::abs(e));
    }
    ojson suites = ojson::array();
    int bad = 0;
    for (auto* s : {&compare, &quasisym, &enc, &chain, &cocycle}) {
        ojson r;
        r["suite"] = s->name;
        r["checks"] = s->checks;
        r["violations"] = s->violations;
        r["worst_slack"] = s->worst;
        suites.push_back(r);
        bad += s->violations;
    }
    ojson b;
    b["pairs"] = pairs;
    b["suites"] = suites;
    b["verdict"] = bad == 0 ? "pass" : "fail";
    c.write_json("report.json", b);
    return bad == 0 ? ok : config_error;
}

}  // namespace

int run(const std::string& command, const std::string& config_text, const std::string& out_dir, std::uint64_t seed, std::string& diag) {
    Context c;
    c.command = command;
    c.seed = seed;
    try {
        try {
            c.cfg = json::parse(config_text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("malformed JSON: ") + e.what());
        }
        if (!c.cfg.is_object()) throw ConfigError("config must be a JSON object");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(c.cfg.dump()));
        c.hash = buf;
        try {
            c.model = model_from(c.cfg.contains("model") ? c.cfg["model"] : json::object());
        } catch (const Error& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
        c.out = out_dir;
        std::error_code ec;
        std::filesystem::create_directories(c.out, ec);
        if (ec) throw Error(ErrorCode::io_error, "cannot create " + out_dir);
        if (command == "solve-ma") return cmd_solve_ma(c);
        if (command == "ke") return cmd_ke(c);
        if (command == "balanced") return cmd_balanced(c);
        if (command == "capacity") return cmd_capacity(c);
        if (command == "logenergy") return cmd_logenergy(c);
        if (command == "report") return cmd_report(c);
        throw ConfigError("unknown command " + command);
    } catch (const ConfigError& e) {
        diag = std::string("config error: ") + e.what();
        return config_error;
    } catch (const Error& e) {
        diag = std::string(error_name(e.code())) + ": " + e.what();
        return e.code() == ErrorCode::no_convergence ? no_convergence : config_error;
    }
}

int main(int argc, char** argv) {
    CLI::App app{"pluripot"};
    app.require_subcommand(1);
    std::string config, out;
    std::uint64_t seed = 0;
    for (const char* name : {"solve-ma", "ke", "balanced", "capacity", "logenergy", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config)->required();
        sub->add_option("--out", out)->required();
        sub->add_option("--seed", seed);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : config_error;
    }
    std::ifstream f(config, std::ios::binary);
    if (!f) {
        std::cerr << "config error: cannot read " << config << "\n";
        return config_error;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    std::string diag;
    int code = run(app.get_subcommands().front()->get_name(), ss.str(), out, seed, diag);
    if (code != ok) {
        for (auto& ch : diag)
            if (ch == '\n') ch = ' ';
        std::cerr << diag << "\n";
    }
    return code;
}

}  // namespace pluripot::cli
