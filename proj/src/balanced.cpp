#include "pluripot/balanced.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "parallel.hpp"
#include "pluripot/functionals.hpp"
#include "pluripot/measures.hpp"
#include "pluripot/solver.hpp"

namespace pluripot {

namespace {

constexpr double ninf = -std::numeric_limits<double>::infinity();

double log_binom(int n, int j) { return std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0); }

void require_radial_model(const ModelPtr& m, const SectionBasis& b) {
    if (m->n != 1) throw Error(ErrorCode::invalid_dimension, "balanced metrics live on P^1");
    if (m->degree != b.degree) throw Error(ErrorCode::wrong_degree, "basis degree differs from the model degree");
}

}  // namespace

SectionBasis make_basis(int k, int degree) {
    if (k < 1 || degree < 1) throw Error(ErrorCode::invalid_argument, "k and degree must be positive");
    return {k, degree, degree * k + 1};
}

HermitianForm HermitianForm::diagonal(Eigen::VectorXd d) {
    HermitianForm h;
    h.radial = true;
    h.diag = std::move(d);
    h.check_positive();
    return h;
}

HermitianForm HermitianForm::dense(Eigen::MatrixXcd m) {
    HermitianForm h;
    h.radial = false;
    h.full = 0.5 * (m + m.adjoint());
    h.check_positive();
    return h;
}

Eigen::MatrixXcd HermitianForm::matrix() const {
    if (!radial) return full;
    return diag.cast<std::complex<double>>().asDiagonal();
}

HermitianForm HermitianForm::scaled(double c) const {
    HermitianForm h = *this;
    if (radial) h.diag *= c;
    else h.full *= c;
    return h;
}

void HermitianForm::check_positive() const {
    if (radial) {
        for (int j = 0; j < diag.size(); ++j)
            if (!(diag[j] > 0) || !std::isfinite(diag[j])) throw Error(ErrorCode::not_positive_definite, "non-positive pivot");
        return;
    }
    Eigen::LLT<Eigen::MatrixXcd> llt(full);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::not_positive_definite, "Cholesky failed");
}

HermitianForm binomial_form(const SectionBasis& b) {
    Eigen::VectorXd d(b.N);
    for (int j = 0; j < b.N; ++j) d[j] = std::exp(-std::log(double(b.N)) - log_binom(b.N - 1, j));
    return HermitianForm::diagonal(d);
}

Setting parse_setting(const std::string& s) {
    if (s == "S_mu") return Setting::S_mu;
    if (s == "S_minus") return Setting::S_minus;
    if (s == "S_plus") throw Error(ErrorCode::setting_mismatch, "S_plus has no model here");
    throw Error(ErrorCode::invalid_argument, "unknown setting " + s);
}

Potential fs_map(const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H) {
    require_radial_model(model, basis);
    if (!H.radial) throw Error(ErrorCode::invalid_argument, "fs_map on the radial grid needs a diagonal form");
    if (H.size() != basis.N) throw Error(ErrorCode::invalid_argument, "form size differs from N_k");
    H.check_positive();
    std::vector<double> lh(basis.N);
    for (int j = 0; j < basis.N; ++j) lh[j] = std::log(H.diag[j]);
    std::vector<double> v(model->size());
    const double logN = std::log(double(basis.N));
    for (std::size_t i = 0; i < v.size(); ++i) {
        double t = model->grid[i], mx = ninf;
        for (int j = 0; j < basis.N; ++j) mx = std::max(mx, j * t - lh[j]);
        double s = 0;
        for (int j = 0; j < basis.N; ++j) s += std::exp(j * t - lh[j] - mx);
        v[i] = (mx + std::log(s) - logN) / basis.k;
    }
    return Potential(model, v);
}

HermitianForm gram_map(const ModelPtr& model, const SectionBasis& basis, const MeasureField& mu, const Potential& psi) {
    require_radial_model(model, basis);
    check_same_grid(model, mu.model);
    check_same_grid(model, psi.model);
    std::vector<std::size_t> idx;
    std::vector<double> base;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        double m = mu.mass(i);
        if (m > 0) {
            idx.push_back(i);
            base.push_back(std::log(m) - basis.k * psi[i]);
        }
    }
    if (idx.empty()) throw Error(ErrorCode::invalid_argument, "zero measure");
    Eigen::VectorXd d(basis.N);
    detail::parallel_for(std::size_t(basis.N), [&](std::size_t j) {
        double mx = ninf;
        for (std::size_t q = 0; q < idx.size(); ++q) mx = std::max(mx, base[q] + j * model->grid[idx[q]]);
        double s = 0;
        for (std::size_t q = 0; q < idx.size(); ++q) s += std::exp(base[q] + j * model->grid[idx[q]] - mx);
        d[j] = std::exp(mx + std::log(s));
    });
    if (d.maxCoeff() < 1e-300) throw Error(ErrorCode::quadrature_underflow, "all Gram entries underflow");
    return HermitianForm::diagonal(d);
}

MeasureField setting_measure(Setting s, const ModelPtr& model, const MeasureField* mu_input, const Potential& psi) {
    switch (s) {
        case Setting::S_mu:
            if (!mu_input) throw Error(ErrorCode::setting_mismatch, "S_mu needs an input measure");
            check_same_grid(model, mu_input->model);
            return *mu_input;
        case Setting::S_minus:
            if (model->degree != 2 || model->n != 1) throw Error(ErrorCode::setting_mismatch, "S_minus needs the degree-2 model");
            return canonical_measure(model, psi);
        case Setting::S_plus:
            break;
    }
    throw Error(ErrorCode::setting_mismatch, "S_plus is not available");
}

HermitianForm base_form(const ModelPtr& model, const SectionBasis& basis) {
    return gram_map(model, basis, reference_ma(model), Potential::reference(model));
}

namespace {

double logdet(const HermitianForm& H) {
    if (H.radial) {
        double s = 0;
        for (int j = 0; j < H.diag.size(); ++j) s += std::log(H.diag[j]);
        return s;
    }
    Eigen::LLT<Eigen::MatrixXcd> llt(H.full);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::not_positive_definite, "Cholesky failed");
    double s = 0;
    Eigen::MatrixXcd L = llt.matrixL();
    for (int j = 0; j < L.rows(); ++j) s += 2 * std::log(L(j, j).real());
    return s;
}

// generalized eigenvalues of (G, H)
Eigen::VectorXd rel_eigs(const HermitianForm& H, const HermitianForm& G) {
    if (H.radial && G.radial) return G.diag.cwiseQuotient(H.diag);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(G.matrix(), H.matrix(), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    return es.eigenvalues();
}

}  // namespace

double dk(const SectionBasis& basis, const HermitianForm& H, const HermitianForm& base) {
    H.check_positive();
    base.check_positive();
    if (H.size() != basis.N || base.size() != basis.N) throw Error(ErrorCode::invalid_argument, "form size differs from N_k");
    return -(logdet(H) - logdet(base)) / (2.0 * basis.k * basis.N);
}

double l_of_fk(Setting s, const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H, const MeasureField* mu_input) {
    auto psi = fs_map(model, basis, H);
    if (s == Setting::S_mu) {
        if (!mu_input) throw Error(ErrorCode::setting_mismatch, "S_mu needs an input measure");
        return l_mu(model, *mu_input, psi);
    }
    if (s == Setting::S_minus) return l_minus(model, psi);
    throw Error(ErrorCode::setting_mismatch, "S_plus is not available");
}

double fk_functional(Setting s, const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H, const HermitianForm& base,
                     const MeasureField* mu_input) {
    return dk(basis, H, base) - l_of_fk(s, model, basis, H, mu_input);
}

double jk_functional(const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H, const HermitianForm& base) {
    return l_zero(model, fs_map(model, basis, H)) - dk(basis, H, base);
}

HermitianForm tk_map(Setting s, const ModelPtr& model, const SectionBasis& basis, const MeasureField* mu_input, const HermitianForm& H) {
    auto psi = fs_map(model, basis, H);
    return gram_map(model, basis, setting_measure(s, model, mu_input, psi), psi);
}

double fp_gap(const HermitianForm& H, const HermitianForm& G) {
    auto e = rel_eigs(H, G);
    double lo = std::log(e.minCoeff()), hi = std::log(e.maxCoeff());
    return hi - lo;
}

double equal_norms_gap(const HermitianForm& H, const HermitianForm& T) {
    auto e = rel_eigs(H, T);
    return e.maxCoeff() / e.minCoeff() - 1;
}

std::string BalancedTrace::to_csv(const std::string& header) const {
    std::string s = header;
    if (!s.empty() && s.back() != '\n') s += '\n';
    s += "iter,F_k,J_k,fp_gap\n";
    char buf[128];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.iter, r.F_k, r.J_k, r.fp_gap);
        s += buf;
    }
    return s;
}

namespace {

HermitianForm trace_normalize(const HermitianForm& G, const HermitianForm& base, int N) {
    double tr = G.diag.cwiseQuotient(base.diag).sum();
    return G.scaled(N / tr);
}

HermitianForm mirror(const HermitianForm& H) {
    // geometric mean with the image under z -> 1/z
    Eigen::VectorXd d(H.diag.size());
    int n = int(d.size());
    for (int j = 0; j < n; ++j) d[j] = std::sqrt(H.diag[j] * H.diag[n - 1 - j]);
    return HermitianForm::diagonal(d);
}

// Newton ascent on F_k in log-coordinates x_j = log H_jj, Hessian of the S_mu form with the
// current setting measure frozen.
bool newton_fallback(Setting s, const ModelPtr& model, const SectionBasis& basis, const MeasureField* mu_input,
                     const HermitianForm& base, HermitianForm& H, BalancedTrace& trace, const BalancedOptions& opts) {
    const int N = basis.N;
    const int k = basis.k;
    int it0 = trace.records.empty() ? 0 : trace.records.back().iter + 1;
    for (int it = 0; it < opts.fallback_iter; ++it) {
        auto psi = fs_map(model, basis, H);
        auto mu = setting_measure(s, model, mu_input, psi).normalized();
        auto G = gram_map(model, basis, setting_measure(s, model, mu_input, psi), psi);
        double gap = fp_gap(H, G);
        double F = fk_functional(s, model, basis, H, base, mu_input);
        trace.records.push_back({it0 + it, F, jk_functional(model, basis, H, base), gap});
        if (gap < opts.tol_fp) return true;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(N);
        Eigen::MatrixXd Hs = Eigen::MatrixXd::Zero(N, N);
        Eigen::VectorXd sig(N);
        for (std::size_t i = 0; i < psi.size(); ++i) {
            double m = mu.mass(i);
            if (m <= 0) continue;
            double t = model->grid[i], mx = ninf;
            for (int j = 0; j < N; ++j) mx = std::max(mx, j * t - std::log(H.diag[j]));
            double tot = 0;
            for (int j = 0; j < N; ++j) tot += (sig[j] = std::exp(j * t - std::log(H.diag[j]) - mx));
            sig /= tot;
            g += m * sig;
            Hs += m * (sig * sig.transpose());
            Hs.diagonal() -= m * sig;
        }
        g = (g.array() - 1.0 / N).matrix() / (2.0 * k);
        Hs /= (2.0 * k);
        Eigen::MatrixXd A = -Hs;
        A.diagonal().array() += 1e-12;
        Eigen::VectorXd dx = A.ldlt().solve(g);
        double step = 1;
        bool ok = false;
        for (int tr = 0; tr < 40; ++tr, step *= 0.5) {
            Eigen::VectorXd d(N);
            for (int j = 0; j < N; ++j) d[j] = H.diag[j] * std::exp(step * dx[j]);
            auto cand = trace_normalize(HermitianForm::diagonal(d), base, N);
            if (s == Setting::S_minus) cand = mirror(cand);
            if (fk_functional(s, model, basis, cand, base, mu_input) >= F) {
                H = cand;
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return false;
}

}  // namespace

BalancedResult balanced_solve(Setting s, const ModelPtr& model, const SectionBasis& basis, const MeasureField* mu_input,
                              const BalancedOptions& opts) {
    require_radial_model(model, basis);
    if (basis.N > 512) throw Error(ErrorCode::invalid_argument, "N_k above the dense budget");
    if (s == Setting::S_plus) throw Error(ErrorCode::setting_mismatch, "S_plus is not available");
    HermitianForm base = base_form(model, basis);
    HermitianForm H = opts.init ? *opts.init : base;
    if (!H.radial) throw Error(ErrorCode::invalid_argument, "radial solve needs a diagonal initial form");
    H = trace_normalize(H, base, basis.N);
    if (s == Setting::S_minus) H = mirror(H);
    BalancedResult r;
    r.trace.method = "fixed-point";
    for (int it = 0;; ++it) {
        auto G = tk_map(s, model, basis, mu_input, H);
        double gap = fp_gap(H, G);
        r.trace.records.push_back({it, fk_functional(s, model, basis, H, base, mu_input), jk_functional(model, basis, H, base), gap});
        if (gap < opts.tol_fp) {
            r.trace.converged = true;
            break;
        }
        if (it >= opts.max_iter) break;
        H = trace_normalize(G, base, basis.N);
        if (s == Setting::S_minus) H = mirror(H);
    }
    if (!r.trace.converged) {
        r.trace.method = "fixed-point+newton";
        r.trace.converged = newton_fallback(s, model, basis, mu_input, base, H, r.trace, opts);
        if (!r.trace.converged) throw Error(ErrorCode::no_convergence, "balanced iteration and fallback both failed");
    }
    r.H = H;
    r.phi = fs_map(model, basis, H);
    return r;
}

BergmanResult bergman(const ModelPtr& model, const SectionBasis& basis, const MeasureField& mu0, const Potential& psi) {
    auto G = gram_map(model, basis, mu0, psi);
    BergmanResult r;
    r.rho.resize(psi.size());
    std::vector<double> lg(basis.N);
    for (int j = 0; j < basis.N; ++j) lg[j] = std::log(G.diag[j]);
    std::vector<double> beta(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        double t = model->grid[i], s = 0;
        for (int j = 0; j < basis.N; ++j) s += std::exp(j * t - basis.k * psi[i] - lg[j]);
        r.rho[i] = s;
        beta[i] = s * mu0.mass(i) / basis.N;
    }
    r.beta = MeasureField::from_nodes(model, beta);
    r.Pk = fs_map(model, basis, G);
    return r;
}

HermitianForm along_geodesic(const HermitianForm& H, const Eigen::VectorXd& lambda, double t) {
    if (!H.radial) throw Error(ErrorCode::invalid_argument, "geodesics are diagonal one-parameter subgroups");
    Eigen::VectorXd d = H.diag;
    for (int j = 0; j < d.size(); ++j) d[j] *= std::exp(-2 * t * lambda[j]);
    return HermitianForm::diagonal(d);
}

double deriv_closed_form(Setting s, const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H, const MeasureField* mu_input,
                         const Eigen::VectorXd& lambda) {
    auto T = tk_map(s, model, basis, mu_input, H);
    Eigen::VectorXd nrm = T.diag.cwiseQuotient(H.diag);
    return lambda.dot(nrm) / nrm.sum() / basis.k;
}

double estim_ratio_sup(const ModelPtr& model, const SectionBasis& basis, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> Z(0, 1);
    auto base = base_form(model, basis);
    Potential ref = Potential::reference(model);
    double sup = ninf;
    for (int q = 0; q < samples; ++q) {
        Eigen::VectorXd d = base.diag;
        for (int j = 0; j < d.size(); ++j) d[j] *= std::exp(0.5 * basis.k * Z(rng) / basis.N);
        auto H = HermitianForm::diagonal(d);
        auto psi = fs_map(model, basis, H);
        if (!is_full_mass(monge_ampere(model, psi))) continue;
        double Jk = jk_functional(model, basis, H, base);
        double J = functional_J(model, ref, psi);
        if (Jk > 0) sup = std::max(sup, J / Jk);
    }
    return sup;
}

AngularGrid angular_grid(const ModelPtr& model, int n_theta, const std::function<double(double, double)>& factor) {
    if (model->n != 1) throw Error(ErrorCode::invalid_dimension, "angular grid needs n=1");
    auto fs = fs_volume_sampled(model);
    AngularGrid g;
    double tot = 0;
    for (std::size_t i = 0; i < model->size(); ++i)
        for (int q = 0; q < n_theta; ++q) {
            double th = 2 * M_PI * q / n_theta;
            double w = fs.mass(i) * factor(model->grid[i], th) / n_theta;
            if (!(w >= 0)) throw Error(ErrorCode::invalid_argument, "negative angular density");
            g.t.push_back(model->grid[i]);
            g.theta.push_back(th);
            g.w.push_back(w);
            tot += w;
        }
    for (auto& w : g.w) w /= tot;
    return g;
}

namespace {

// binomially scaled monomials e^{-c} s_a(p), c = (dk/2) max(t,0)
Eigen::VectorXcd scaled_sections(const SectionBasis& b, double t, double th, double& c) {
    int dk = b.N - 1;
    c = 0.5 * dk * std::max(t, 0.0);
    Eigen::VectorXcd v(b.N);
    for (int a = 0; a < b.N; ++a) {
        double lm = 0.5 * (std::log(double(b.N)) + log_binom(dk, a)) + 0.5 * a * t - c;
        v[a] = std::polar(std::exp(lm), a * th);
    }
    return v;
}

}  // namespace

std::vector<double> fs_values(const SectionBasis& b, const HermitianForm& H, const AngularGrid& g) {
    Eigen::LLT<Eigen::MatrixXcd> llt(H.matrix());
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::not_positive_definite, "Cholesky failed");
    std::vector<double> psi(g.t.size());
    for (std::size_t p = 0; p < psi.size(); ++p) {
        double c;
        auto v = scaled_sections(b, g.t[p], g.theta[p], c);
        Eigen::VectorXcd y = llt.matrixL().solve(v);
        psi[p] = (2 * c + std::log(y.squaredNorm() / b.N)) / b.k;
    }
    return psi;
}

std::vector<double> fs_values_eigen(const SectionBasis& b, const HermitianForm& H, const AngularGrid& g) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H.matrix());
    if (es.eigenvalues().minCoeff() <= 0) throw Error(ErrorCode::not_positive_definite, "non-positive eigenvalue");
    Eigen::MatrixXcd W = es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
    std::vector<double> psi(g.t.size());
    for (std::size_t p = 0; p < psi.size(); ++p) {
        double c;
        auto v = scaled_sections(b, g.t[p], g.theta[p], c);
        psi[p] = (2 * c + std::log((W * v).squaredNorm() / b.N)) / b.k;
    }
    return psi;
}

HermitianForm gram_dense(const SectionBasis& b, const AngularGrid& g, const std::vector<double>& psi) {
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(b.N, b.N);
    for (std::size_t p = 0; p < psi.size(); ++p) {
        if (g.w[p] <= 0) continue;
        double c;
        auto v = scaled_sections(b, g.t[p], g.theta[p], c);
        double f = g.w[p] * std::exp(2 * c - b.k * psi[p]);
        G.noalias() += f * (v * v.adjoint());
    }
    return HermitianForm::dense(G.transpose());
}

BalancedResult balanced_solve_dense(const SectionBasis& b, const AngularGrid& g, const BalancedOptions& opts) {
    HermitianForm H = opts.init ? *opts.init : HermitianForm::dense(Eigen::MatrixXcd::Identity(b.N, b.N));
    BalancedResult r;
    r.trace.method = "fixed-point-dense";
    for (int it = 0;; ++it) {
        auto G = gram_dense(b, g, fs_values(b, H, g));
        double gap = fp_gap(H, G);
        r.trace.records.push_back({it, 0, 0, gap});
        if (gap < opts.tol_fp) {
            r.trace.converged = true;
            break;
        }
        if (it >= opts.max_iter) break;
        H = G.scaled(b.N / G.full.trace().real());
    }
    if (!r.trace.converged) {
        // damped: geometric midpoint H # t_k(H)
        r.trace.method = "fixed-point-dense+damped";
        for (int it = 0; it < opts.fallback_iter && !r.trace.converged; ++it) {
            auto G = gram_dense(b, g, fs_values(b, H, g));
            double gap = fp_gap(H, G);
            r.trace.records.push_back({int(r.trace.records.size()), 0, 0, gap});
            if (gap < opts.tol_fp) {
                r.trace.converged = true;
                break;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eh(H.full);
            Eigen::MatrixXcd Hh = eh.operatorSqrt(), Hih = eh.operatorInverseSqrt();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> em(Hih * G.full * Hih);
            Eigen::MatrixXcd mid = Hh * em.operatorSqrt() * Hh;
            H = HermitianForm::dense(mid);
            H = H.scaled(b.N / H.full.trace().real());
        }
        if (!r.trace.converged) throw Error(ErrorCode::no_convergence, "dense balanced iteration and damped fallback both failed");
    }
    r.H = H;
    return r;
}

}  // namespace pluripot
