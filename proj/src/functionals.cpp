#include "pluripot/functionals.hpp"

#include <cmath>

#include "json.hpp"
#include "pluripot/measures.hpp"
#include "pluripot/solver.hpp"

namespace pluripot {

namespace {

void require_full(const MeasureField& m, const char* what) {
    if (!is_full_mass(m)) throw Error(ErrorCode::non_full_mass, what);
}

double integrate(const std::vector<double>& f, const MeasureField& mu) {
    double s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * mu.mass(i);
    return s;
}

std::vector<double> half_diff(const Potential& a, const Potential& b) {
    std::vector<double> u(a.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.5 * (a.values[i] - b.values[i]);
    return u;
}

}  // namespace

double pairing(const ModelPtr& model, const Potential& a, const Potential& b, const MeasureField& mu) {
    check_same_grid(model, a.model);
    check_same_grid(model, b.model);
    check_same_grid(model, mu.model);
    return integrate(half_diff(a, b), mu);
}

double energy(const ModelPtr& model, const Potential& psi) {
    check_same_grid(model, psi.model);
    Potential ref = Potential::reference(model);
    auto ma = monge_ampere(model, psi);
    require_full(ma, "energy needs full mass");
    const auto& m0 = reference_ma(model);
    auto u = half_diff(psi, ref);
    if (model->n == 1) return 0.5 * (integrate(u, ma) + integrate(u, m0));
    auto mix = mixed_monge_ampere(model, {psi, ref});
    return (integrate(u, ma) + integrate(u, mix) + integrate(u, m0)) / 3.0;
}

double energy_legendre(const ModelPtr& model, const Potential& psi) {
    double a = legendre_integral(model, psi);
    double b = legendre_integral(model, Potential::reference(model));
    return -0.5 * (a - b) / model->mass_normalization;
}

double functional_I(const ModelPtr& model, const Potential& phi, const Potential& psi) {
    auto ma = monge_ampere(model, phi);
    auto mb = monge_ampere(model, psi);
    require_full(ma, "I needs full mass");
    require_full(mb, "I needs full mass");
    auto u = half_diff(phi, psi);
    return integrate(u, mb) - integrate(u, ma);
}

double functional_J(const ModelPtr& model, const Potential& base, const Potential& phi) {
    auto mb = monge_ampere(model, base);
    require_full(mb, "J needs full mass");
    return energy(model, base) - energy(model, phi) + pairing(model, phi, base, mb);
}

double functional_J_gradient(const ModelPtr& model, const Potential& base, const Potential& phi) {
    check_same_grid(model, base.model);
    check_same_grid(model, phi.model);
    auto u = half_diff(phi, base);
    if (model->n == 1) {
        // (1/d) sum over cells of h * slope(u)^2
        double s = 0;
        for (std::size_t c = 0; c + 1 < u.size(); ++c) {
            double h = model->grid[c + 1] - model->grid[c];
            double g = (u[c + 1] - u[c]) / h;
            s += h * g * g;
        }
        return s / model->degree;
    }
    auto ma_phi = monge_ampere(model, phi);
    auto ma_base = monge_ampere(model, base);
    auto mix = mixed_monge_ampere(model, {phi, base});
    double a = integrate(u, mix) - integrate(u, ma_base);
    double b = integrate(u, ma_phi) - integrate(u, mix);
    return -(a + 2 * b) / 3.0;
}

std::vector<double> monotone_chain(const ModelPtr& model, const Potential& phi, const Potential& psi) {
    auto u = half_diff(phi, psi);
    auto ma_phi = monge_ampere(model, phi);
    auto ma_psi = monge_ampere(model, psi);
    if (model->n == 1) return {integrate(u, ma_phi), integrate(u, ma_psi)};
    auto mix = mixed_monge_ampere(model, {phi, psi});
    return {integrate(u, ma_phi), integrate(u, mix), integrate(u, ma_psi)};
}

double energy_cocycle(const ModelPtr& model, const Potential& phi, const Potential& psi) {
    auto p = monotone_chain(model, phi, psi);
    double s = 0;
    for (double x : p) s += x;
    return s / (model->n + 1);
}

double l_mu(const ModelPtr& model, const MeasureField& mu, const Potential& psi) {
    check_same_grid(model, mu.model);
    if (std::abs(mu.total - 1) > tol.tol_mass) throw Error(ErrorCode::mass_not_one, "L_mu needs a probability measure");
    if (mu.max_atom() > tol.atom_tol) throw Error(ErrorCode::invalid_argument, "L_mu needs a measure without boundary atoms");
    return pairing(model, psi, Potential::reference(model), mu);
}

double l_zero(const ModelPtr& model, const Potential& psi) {
    return pairing(model, psi, Potential::reference(model), reference_ma(model));
}

double f_mu(const ModelPtr& model, const MeasureField& mu, const Potential& psi) {
    return energy(model, psi) - l_mu(model, mu, psi);
}

std::pair<double, Potential> energy_star(const ModelPtr& model, const MeasureField& mu, const SolveOptions& opts) {
    auto r = solve_ma(model, mu, opts);
    return {f_mu(model, mu, r.psi), r.psi};
}

std::pair<double, Potential> energy_star(const ModelPtr& model, const MeasureField& mu) {
    return energy_star(model, mu, SolveOptions{});
}

double l_minus(const ModelPtr& model, const Potential& psi) {
    auto nu = canonical_measure(model, psi);
    return -0.5 * std::log(nu.total);
}

double f_minus(const ModelPtr& model, const Potential& psi) { return energy(model, psi) - l_minus(model, psi); }

EnergyReport energy_report(const ModelPtr& model, const Potential& psi, const MeasureField* mu) {
    EnergyReport r;
    r.E = energy(model, psi);
    r.L_0 = l_zero(model, psi);
    Potential ref = Potential::reference(model);
    r.I = functional_I(model, psi, ref);
    r.J = functional_J(model, ref, psi);
    if (mu) {
        r.L_mu = l_mu(model, *mu, psi);
        r.F_mu = r.E - *r.L_mu;
    }
    r.notes.push_back("grid " + model->describe());
    char buf[120];
    std::snprintf(buf, sizeof buf, "tol_hull=%g tol_mass=%g atom_tol=%g", tol.tol_hull, tol.tol_mass, tol.atom_tol);
    r.notes.push_back(buf);
    return r;
}

std::string EnergyReport::to_json() const {
    nlohmann::ordered_json j;
    auto opt = [](const std::optional<double>& x) { return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(); };
    j["E"] = E;
    j["L_mu"] = opt(L_mu);
    j["L_0"] = opt(L_0);
    j["F_mu"] = opt(F_mu);
    j["I"] = opt(I);
    j["J"] = opt(J);
    j["E_star"] = opt(E_star);
    j["notes"] = notes;
    return j.dump(2) + "\n";
}

CoercivityReport coercivity_diagnostic(const ModelPtr& model, const MeasureField& mu, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> S(0.5, 4.0);
    CoercivityReport r;
    Potential ref = Potential::reference(model);
    for (int k = 0; k < samples; ++k) {
        auto p = random_potential(model, rng);
        double s = S(rng);
        std::vector<double> u(p.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = ref[i] + s * (p[i] - ref[i]);
        auto q = psh_envelope(model, u);
        if (!is_full_mass(monge_ampere(model, q))) continue;
        r.J.push_back(functional_J(model, ref, q));
        r.F.push_back(f_mu(model, mu, q));
    }
    double n = double(r.J.size());
    if (n >= 2) {
        double mx = 0, my = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < r.J.size(); ++i) {
            mx += r.J[i] / n;
            my += r.F[i] / n;
        }
        for (std::size_t i = 0; i < r.J.size(); ++i) {
            sxx += (r.J[i] - mx) * (r.J[i] - mx);
            sxy += (r.J[i] - mx) * (r.F[i] - my);
        }
        r.slope = sxx > 0 ? sxy / sxx : 0;
        r.intercept = my - r.slope * mx;
    }
    return r;
}

}  // namespace pluripot
