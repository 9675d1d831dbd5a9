#include "pluripot/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "pluripot/functionals.hpp"
#include "pluripot/measures.hpp"
#include "pluripot/power_diagram.hpp"

namespace pluripot {

void SolveOptions::validate() const {
    if (!(tol_residual > 0)) throw Error(ErrorCode::invalid_argument, "tol_residual must be positive");
    if (!(shrink > 0 && shrink < 1)) throw Error(ErrorCode::invalid_argument, "shrink must lie in (0,1)");
    if (!(step0 > 0)) throw Error(ErrorCode::invalid_argument, "step0 must be positive");
    if (max_iter < 0 || max_tries < 1) throw Error(ErrorCode::invalid_argument, "iteration limits");
}

std::string SolveTrace::to_csv(const std::string& header) const {
    std::string s = header;
    if (!s.empty() && s.back() != '\n') s += '\n';
    s += "iter,F_mu,residual_l1,step,I_to_final\n";
    char buf[160];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.F_mu, r.residual_l1, r.step, r.I_to_final);
        s += buf;
    }
    return s;
}

double residual_l1(const MeasureField& a, const MeasureField& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.cell_mass.size(); ++i) s += std::abs(a.mass(i) - b.mass(i));
    return s;
}

Potential normalize_l0(const ModelPtr& model, const Potential& psi) { return psi + (-2 * l_zero(model, psi)); }

namespace {

void check_measure(const ModelPtr& model, const MeasureField& mu) {
    check_same_grid(model, mu.model);
    if (std::abs(mu.total - 1) > tol.tol_mass) throw Error(ErrorCode::mass_not_one, "solve_ma needs a probability measure");
    int A = model->axis();
    double edge = 0;
    for (std::size_t k = 0; k < mu.cell_mass.size(); ++k) {
        bool near;
        if (model->n == 1) {
            near = k < 2 || int(k) > A - 3;
        } else {
            int i = int(k) / A, j = int(k) % A;
            near = i < 2 || j < 2 || i > A - 3 || j > A - 3;
        }
        if (near) edge += mu.mass(k);
    }
    if (edge > tol.atom_tol) throw Error(ErrorCode::measure_touches_boundary, "measure has mass within two cells of the window edge");
}

std::vector<double> direct_1d(const ModelPtr& model, const MeasureField& mu) {
    const auto& g = model->grid;
    std::vector<double> psi(g.size());
    double cum = 0;
    psi[0] = 0;
    for (std::size_t c = 0; c + 1 < g.size(); ++c) {
        cum += mu.mass(c);
        double s = model->degree * std::min(cum, 1.0);
        psi[c + 1] = psi[c] + (g[c + 1] - g[c]) * s;
    }
    return psi;
}

// (eps I - dMA/du)^{-1} r over the active nodes; dMA/du is minus the weighted graph Laplacian
// of the subgradient cells.
std::vector<double> precondition(const ModelPtr& model, const Potential& psi, const std::vector<char>& active,
                                 const std::vector<double>& r) {
    const std::size_t N = r.size();
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> diag(N, 0.0);
    auto edge = [&](std::size_t i, std::size_t j, double w) {
        trip.emplace_back(i, j, -w);
        trip.emplace_back(j, i, -w);
        diag[i] += w;
        diag[j] += w;
    };
    if (model->n == 1) {
        std::size_t prev = N;
        for (std::size_t c = 0; c < N; ++c) {
            if (!active[c]) continue;
            if (prev < N) edge(prev, c, 1.0 / (model->degree * (model->grid[c] - model->grid[prev])));
            prev = c;
        }
    } else {
        auto cells = power_cells(*model, psi.values, &active);
        auto adj = cell_adjacency(*model, cells);
        // each shared edge is listed from both sides
        for (std::size_t e = 0; e < adj.w.size(); ++e) edge(adj.i[e], adj.j[e], 0.5 * adj.w[e]);
    }
    double dmax = 0;
    for (double d : diag) dmax = std::max(dmax, d);
    double eps = 1e-13 * std::max(dmax, 1.0);
    for (std::size_t i = 0; i < N; ++i) trip.emplace_back(i, i, diag[i] + eps);
    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
    Eigen::VectorXd b(N);
    for (std::size_t i = 0; i < N; ++i) b[i] = active[i] ? r[i] : 0.0;
    Eigen::VectorXd x = solver.solve(b);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::no_convergence, "preconditioner factorization failed");
    return std::vector<double>(x.data(), x.data() + N);
}

void fill_distances(const ModelPtr& model, SolveTrace& trace, const std::vector<Potential>& iterates, const Potential& fin) {
    for (std::size_t k = 0; k < trace.records.size() && k < iterates.size(); ++k)
        trace.records[k].I_to_final = functional_I(model, iterates[k], fin);
}

}  // namespace

SolveResult solve_ma_ascent(const ModelPtr& model, const MeasureField& mu, const SolveOptions& opts) {
    opts.validate();
    check_measure(model, mu);
    const std::size_t N = model->size();
    const double inf = std::numeric_limits<double>::infinity();
    // unknowns live on the support of mu; other nodes follow from the envelope
    std::vector<char> active(N);
    for (std::size_t i = 0; i < N; ++i) active[i] = mu.mass(i) > 1e-11;
    auto lift = [&](const std::vector<double>& v) {
        std::vector<double> u(N, inf);
        for (std::size_t i = 0; i < N; ++i)
            if (active[i]) u[i] = v[i];
        return psh_envelope(model, u);
    };
    auto min_active = [&](const MeasureField& m) {
        double lo = inf;
        for (std::size_t i = 0; i < N; ++i)
            if (active[i]) lo = std::min(lo, m.mass(i));
        return lo;
    };
    auto objective = [&](const Potential& p) { return energy_legendre(model, p) - l_mu(model, mu, p); };

    Potential psi = lift(opts.init ? opts.init->values : model->reference);
    check_same_grid(model, psi.model);
    auto ma = monge_ampere(model, psi);
    if (!(min_active(ma) > 0)) {
        psi = lift(model->reference);
        ma = monge_ampere(model, psi);
    }
    // damped Newton: keep every active cell above floor, shrink the residual by (1 - s/2)
    const double floor = 0.5 * std::min(min_active(mu), min_active(ma));
    double active_mass = 0;
    for (std::size_t i = 0; i < N; ++i)
        if (active[i]) active_mass += mu.mass(i);
    const double target_scale = 1 / active_mass;
    SolveResult res;
    res.trace.method = "damped-newton";
    std::vector<Potential> iterates;
    double F = objective(psi);
    double resid = residual_l1(ma, mu);
    double step = 0;
    for (int it = 0;; ++it) {
        res.trace.records.push_back({it, F, resid, step, 0});
        iterates.push_back(psi);
        if (resid <= opts.tol_residual) {
            res.trace.converged = true;
            break;
        }
        if (it >= opts.max_iter) break;
        // active cells carry all of MA's unit mass, so aim at mu rescaled to unit mass there
        std::vector<double> r(N);
        for (std::size_t i = 0; i < N; ++i) r[i] = ma.mass(i) - mu.mass(i) * target_scale;
        auto dir = precondition(model, psi, active, r);
        bool accepted = false;
        step = opts.step0;
        for (int tr = 0; tr < opts.max_tries; ++tr, step *= opts.shrink) {
            std::vector<double> v(N);
            for (std::size_t i = 0; i < N; ++i) v[i] = psi[i] + step * dir[i];
            Potential cand = lift(v);
            auto mc = monge_ampere(model, cand);
            double rc = residual_l1(mc, mu);
            if (!is_full_mass(mc) || min_active(mc) < floor) continue;
            if (rc > (1 - 0.5 * std::min(step, 1.0)) * resid) continue;
            double Fc = objective(cand);
            if (!(Fc >= F)) continue;
            psi = cand;
            ma = mc;
            resid = rc;
            F = Fc;
            accepted = true;
            break;
        }
        if (!accepted) break;
    }
    psi = normalize_l0(model, psi);
    for (auto& p : iterates) p = normalize_l0(model, p);
    fill_distances(model, res.trace, iterates, psi);
    res.psi = psi;
    if (!res.trace.converged) throw Error(ErrorCode::no_convergence, "ascent stalled above tol_residual");
    return res;
}

SolveResult solve_ma(const ModelPtr& model, const MeasureField& mu, const SolveOptions& opts) {
    opts.validate();
    check_measure(model, mu);
    if (model->n == 2 || opts.force_ascent) return solve_ma_ascent(model, mu, opts);
    SolveResult res;
    res.trace.method = "direct";
    Potential psi = normalize_l0(model, Potential(model, direct_1d(model, mu)));
    double resid = residual_l1(monge_ampere(model, psi), mu);
    res.trace.records.push_back({0, f_mu(model, mu, psi), resid, 0, 0});
    res.trace.converged = resid <= opts.tol_residual;
    res.psi = psi;
    if (!res.trace.converged) throw Error(ErrorCode::no_convergence, "direct integration residual above tolerance");
    return res;
}

MeasureField canonical_measure(const ModelPtr& model, const Potential& psi) {
    if (model->n != 1 || model->degree != 2) throw Error(ErrorCode::wrong_degree, "canonical measure needs the degree-2 model of P^1");
    check_same_grid(model, psi.model);
    const auto& m0 = reference_ma(model);
    std::vector<double> cells(psi.size()), atoms(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        double f = std::exp(model->reference[i] - psi[i]);
        cells[i] = m0.cell_mass[i] * f;
        atoms[i] = m0.boundary_atoms[i] * f;
    }
    return MeasureField(model, cells, atoms);
}

Potential inversion(const ModelPtr& model, const Potential& psi) {
    if (model->n != 1) throw Error(ErrorCode::invalid_dimension, "inversion is defined on n=1");
    std::size_t M = psi.size() - 1;
    std::vector<double> v(psi.size());
    for (std::size_t i = 0; i <= M; ++i) v[i] = psi[M - i] + model->degree * model->grid[i];
    return Potential(model, v);
}

namespace {

Potential symmetrize(const ModelPtr& model, const Potential& psi) {
    auto s = inversion(model, psi);
    std::vector<double> v(psi.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (psi[i] + s[i]);
    return Potential(model, v);
}

}  // namespace

KEResult solve_ke_fano(const ModelPtr& model, const SolveOptions& opts) {
    opts.validate();
    if (model->n != 1 || model->degree != 2) throw Error(ErrorCode::wrong_degree, "KE solver needs the degree-2 model of P^1");
    Potential psi = opts.init ? psh_envelope(model, opts.init->values) : Potential::reference(model);
    psi = normalize_l0(model, symmetrize(model, psi));
    KEResult r;
    r.trace.method = "inverse-ma";
    std::vector<Potential> iterates;
    SolveOptions inner;
    inner.tol_residual = 1e-9;
    double step_I = 0;
    for (int it = 0;; ++it) {
        auto nu = canonical_measure(model, psi);
        auto target = nu.normalized();
        double resid = residual_l1(monge_ampere(model, psi), target);
        double F = f_minus(model, psi);
        r.F_minus.push_back(F);
        r.trace.records.push_back({it, F, resid, step_I, 0});
        iterates.push_back(psi);
        if (resid <= opts.tol_residual) {
            r.trace.converged = true;
            r.residual = resid;
            r.c = -std::log(nu.total);
            break;
        }
        if (it >= opts.max_iter) break;
        auto next = normalize_l0(model, symmetrize(model, solve_ma(model, target, inner).psi));
        step_I = functional_I(model, next, psi);
        psi = next;
    }
    fill_distances(model, r.trace, iterates, psi);
    r.psi = psi;
    if (!r.trace.converged) throw Error(ErrorCode::no_convergence, "KE iteration did not reach tol_residual");
    return r;
}

MaximizingReport maximizing_sequence_diagnostic(const ModelPtr& model, const MeasureField& mu, const std::vector<Potential>& seq) {
    MaximizingReport r;
    r.maximizer = solve_ma(model, mu).psi;
    for (const auto& p : seq) {
        r.F.push_back(f_mu(model, mu, p));
        r.I_to_max.push_back(functional_I(model, p, r.maximizer));
    }
    std::size_t n = seq.size(), start = n / 2;
    r.F_increasing_tail = true;
    r.I_decreasing_tail = true;
    for (std::size_t k = 1; k < n; ++k) {
        if (r.F[k] < r.F[k - 1]) r.F_decreasing_flag = true;
        if (k > start) {
            if (r.F[k] < r.F[k - 1]) r.F_increasing_tail = false;
            if (r.I_to_max[k] > r.I_to_max[k - 1]) r.I_decreasing_tail = false;
        }
    }
    return r;
}

}  // namespace pluripot
