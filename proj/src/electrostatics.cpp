#include "pluripot/electrostatics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "pluripot/functionals.hpp"

namespace pluripot {

namespace {

void require_1d(const ModelPtr& m) {
    if (m->n != 1) throw Error(ErrorCode::invalid_dimension, "electrostatics lives on n=1 models");
}

std::string fmt(const char* f, double a, double b = 0) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

}  // namespace

WeightedCompact disk(const ModelPtr& model, double R) {
    require_1d(model);
    WeightedCompact kv;
    double tR = 2 * std::log(R);
    kv.K.assign(model->size(), 0);
    kv.v.assign(model->size(), 0.0);
    // tolerance for grids aligned on tR
    for (std::size_t i = 0; i < model->size(); ++i) kv.K[i] = model->grid[i] <= tR + 1e-9 * model->h;
    kv.K_descriptor = fmt("disk R=%.17g", R);
    kv.v_descriptor = "zero";
    return kv;
}

WeightedCompact annulus(const ModelPtr& model, double r_in, double r_out) {
    require_1d(model);
    WeightedCompact kv;
    double a = 2 * std::log(r_in), b = 2 * std::log(r_out);
    kv.K.assign(model->size(), 0);
    kv.v.assign(model->size(), 0.0);
    for (std::size_t i = 0; i < model->size(); ++i) {
        double t = model->grid[i];
        kv.K[i] = t >= a - 1e-9 * model->h && t <= b + 1e-9 * model->h;
    }
    kv.K_descriptor = fmt("annulus r_in=%.17g r_out=%.17g", r_in, r_out);
    kv.v_descriptor = "zero";
    return kv;
}

WeightedCompact whole_window(const ModelPtr& model) {
    WeightedCompact kv;
    kv.K.assign(model->size(), 1);
    kv.v.assign(model->size(), 0.0);
    kv.K_descriptor = "window";
    kv.v_descriptor = "zero";
    return kv;
}

SignedRadialMeasure::SignedRadialMeasure(MeasureField pos, MeasureField neg)
    : positive_part(std::move(pos)), negative_part(std::move(neg)) {
    require_1d(positive_part.model);
    check_same_grid(positive_part.model, negative_part.model);
}

SignedRadialMeasure::SignedRadialMeasure(MeasureField pos) : positive_part(std::move(pos)) {
    require_1d(positive_part.model);
    negative_part = MeasureField::from_nodes(positive_part.model, std::vector<double>(positive_part.model->size(), 0.0));
}

std::vector<double> SignedRadialMeasure::masses() const {
    std::vector<double> m(positive_part.cell_mass.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = positive_part.mass(i) - negative_part.mass(i);
    return m;
}

std::vector<double> log_potential_nodes(const SignedRadialMeasure& lambda) {
    const auto& g = lambda.model()->grid;
    auto m = lambda.masses();
    std::size_t N = m.size();
    // U(t_k) = (t_k * sum_{i<=k} m_i + sum_{i>k} m_i t_i) / 2
    std::vector<double> above(N + 1, 0.0);
    for (std::size_t i = N; i-- > 0;) above[i] = above[i + 1] + m[i] * g[i];
    std::vector<double> U(N);
    double below = 0;
    for (std::size_t k = 0; k < N; ++k) {
        below += m[k];
        U[k] = 0.5 * (g[k] * below + above[k + 1]);
    }
    return U;
}

double log_potential(const SignedRadialMeasure& lambda, double t) {
    const auto& model = *lambda.model();
    const auto& g = model.grid;
    if (!(t >= g.front() && t <= g.back())) throw Error(ErrorCode::outside_window, "evaluation point outside the window");
    auto m = lambda.masses();
    double s = 0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * 0.5 * std::max(t, g[i]);
    // kink correction inside the cell holding t, density read off the neighbouring nodes
    std::size_t a = std::min<std::size_t>(std::upper_bound(g.begin(), g.end(), t) - g.begin(), g.size() - 1);
    if (a > 0) --a;
    double ta = g[a], tb = g[a + 1], h = tb - ta;
    if (t > ta && t < tb) {
        auto width = [&](std::size_t i) { return (i == 0 || i + 1 == g.size()) ? 0.5 * h : h; };
        double ra = m[a] / width(a), rb = m[a + 1] / width(a + 1);
        double rho = ra + (rb - ra) * (t - ta) / h;
        s -= rho * (tb - t) * (t - ta) / 4;
    }
    return s;
}

double log_energy_pair(const SignedRadialMeasure& a, const SignedRadialMeasure& b) {
    check_same_grid(a.model(), b.model());
    auto U = log_potential_nodes(a);
    auto m = b.masses();
    double s = 0;
    for (std::size_t i = 0; i < m.size(); ++i) s -= m[i] * U[i];
    return s;
}

double log_energy(const SignedRadialMeasure& lambda) {
    if (lambda.positive_part.max_atom() > tol.atom_tol || lambda.negative_part.max_atom() > tol.atom_tol)
        throw Error(ErrorCode::non_compact_support, "measure reaches the window edge");
    return log_energy_pair(lambda, lambda);
}

Equilibrium equilibrium(const ModelPtr& model, const WeightedCompact& kv) {
    Equilibrium e;
    e.P = extremal_function(model, kv.K, kv.v);
    e.mu = monge_ampere(model, e.P);
    e.E = energy(model, e.P);
    return e;
}

Capacities capacities(const ModelPtr& model, const WeightedCompact& kv) {
    auto eq = equilibrium(model, kv);
    Capacities c;
    c.E_eq = eq.E;
    double n = model->n;
    c.C_e = std::exp(-((n + 1) / n) * eq.E);
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < model->size(); ++i) sup = std::max(sup, 0.5 * (eq.P[i] - model->reference[i]));
    c.sup_PKv = sup;
    c.T_alex = std::exp(-sup);
    return c;
}

Potential relative_extremal(const ModelPtr& model, const std::vector<char>& K) {
    if (K.size() != model->size()) throw Error(ErrorCode::grid_mismatch, "K size");
    if (std::none_of(K.begin(), K.end(), [](char c) { return c != 0; })) throw Error(ErrorCode::empty_K, "K has no nodes");
    std::vector<double> u(model->reference);
    for (std::size_t i = 0; i < u.size(); ++i)
        if (K[i]) u[i] -= 2;
    return psh_envelope(model, u);
}

double ma_capacity(const ModelPtr& model, const std::vector<char>& K) {
    auto h = relative_extremal(model, K);
    auto ma = monge_ampere(model, h);
    double s = 0;
    for (std::size_t i = 0; i < K.size(); ++i)
        if (K[i]) s += ma.mass(i);
    return s;
}

double ma_capacity_comp(const ModelPtr& model, const std::vector<char>& K) {
    auto h = relative_extremal(model, K);
    auto ma = monge_ampere(model, h);
    double s = 0;
    for (std::size_t i = 0; i < K.size(); ++i) s += 0.5 * (model->reference[i] - h[i]) * ma.mass(i);
    return s;
}

std::string CapacityReport::to_json() const {
    nlohmann::ordered_json j;
    j["K_descriptor"] = K_descriptor;
    j["v_descriptor"] = v_descriptor;
    j["C_e"] = C_e;
    j["T_alex"] = T_alex;
    j["Cap"] = Cap;
    j["E_eq"] = E_eq;
    j["sup_PKv"] = sup_PKv;
    return j.dump(2);
}

CapacityReport capacity_report(const ModelPtr& model, const WeightedCompact& kv) {
    auto c = capacities(model, kv);
    CapacityReport r;
    r.K_descriptor = kv.K_descriptor;
    r.v_descriptor = kv.v_descriptor;
    r.C_e = c.C_e;
    r.T_alex = c.T_alex;
    r.E_eq = c.E_eq;
    r.sup_PKv = c.sup_PKv;
    r.Cap = ma_capacity(model, kv.K);
    return r;
}

}  // namespace pluripot
