#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "pluripot/balanced.hpp"
#include "pluripot/core.hpp"
#include "pluripot/functionals.hpp"
#include "pluripot/measures.hpp"
#include "pluripot/solver.hpp"

using namespace pluripot;

namespace {

ModelPtr m1() {
    static auto m = make_model(1, 1, 20, 2048);
    return m;
}
ModelPtr m1d2() {
    static auto m = make_model(1, 2, 20, 1024);
    return m;
}

double sup_gap_const(const Potential& a, const std::vector<double>& b) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < b.size(); ++i) {
        lo = std::min(lo, a[i] - b[i]);
        hi = std::max(hi, a[i] - b[i]);
    }
    return 0.5 * (hi - lo);
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

Eigen::VectorXd random_lambda(std::mt19937_64& rng, int N) {
    std::normal_distribution<double> Z(0, 1);
    Eigen::VectorXd l(N);
    for (int j = 0; j < N; ++j) l[j] = Z(rng);
    return l;
}

}  // namespace

TEST_CASE("fs_map of the binomial form and scaling") {
    auto m = m1();
    for (int k : {1, 3, 8, 40}) {
        auto b = make_basis(k, 1);
        auto H = binomial_form(b);
        auto psi = fs_map(m, b, H);
        double worst = 0;
        for (std::size_t i = 0; i < m->size(); ++i) worst = std::max(worst, std::abs(psi[i] - m->reference[i]));
        CHECK(worst < 1e-12);
        for (double c : {0.1, 7.0}) {
            auto s = fs_map(m, b, H.scaled(c));
            double err = 0;
            for (std::size_t i = 0; i < m->size(); ++i) err = std::max(err, std::abs(s[i] - psi[i] + std::log(c) / k));
            CHECK(err < 1e-12);
        }
    }
    Eigen::VectorXd bad(3);
    bad << 1, 0, 1;
    CHECK_THROWS_AS(fs_map(m, make_basis(2, 1), HermitianForm::diagonal(bad)), Error);
    CHECK_THROWS_AS(fs_map(m1d2(), make_basis(2, 1), binomial_form(make_basis(2, 1))), Error);
}

TEST_CASE("Gram matrix against Beta integrals") {
    auto m = m1();
    auto fs = fs_volume_sampled(m);
    auto ref = Potential::reference(m);
    for (int k : {2, 5, 12}) {
        auto b = make_basis(k, 1);
        auto G = gram_map(m, b, fs, ref);
        CHECK(G.radial);
        for (int j = 1; j <= k; ++j) {
            double exact = std::exp(log_beta(j + 1, k - j + 1) - log_beta(1, k + 1));
            CHECK(std::abs(G.diag[j] / G.diag[0] - exact) < 1e-8 * exact);
        }
        auto Gc = gram_map(m, b, fs, ref + 0.6);
        for (int j = 0; j <= k; ++j) CHECK(Gc.diag[j] == doctest::Approx(std::exp(-k * 0.6) * G.diag[j]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(gram_map(m, make_basis(1, 1), fs, ref + 2000), Error);
}

TEST_CASE("Gram matrices are positive definite") {
    auto m = m1();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-3, 3), W(0.5, 4);
    auto b = make_basis(6, 1);
    for (int q = 0; q < 20; ++q) {
        auto mu = q % 2 ? gaussian_measure(m, U(rng), W(rng) / 2) : bump_measure(m, U(rng), W(rng));
        auto G = gram_map(m, b, mu, random_potential(m, rng));
        CHECK_NOTHROW(G.check_positive());
    }
}

TEST_CASE("setting measures") {
    auto m = m1d2();
    auto mu = gaussian_measure(m, 0, 1);
    std::mt19937_64 rng(2);
    auto p = random_potential(m, rng), r = Potential::reference(m);
    CHECK(setting_measure(Setting::S_mu, m, &mu, p).cell_mass == setting_measure(Setting::S_mu, m, &mu, r).cell_mass);
    auto w = setting_measure(Setting::S_minus, m, nullptr, r);
    const auto& ma = reference_ma(m);
    double worst = 0;
    for (std::size_t i = 0; i < m->size(); ++i) worst = std::max(worst, std::abs(w.mass(i) - ma.mass(i)));
    CHECK(worst < 1e-10);
    auto a = setting_measure(Setting::S_minus, m, nullptr, p), c = setting_measure(Setting::S_minus, m, nullptr, p + 0.9);
    CHECK(c.total == doctest::Approx(std::exp(-0.9) * a.total).epsilon(1e-12));
    CHECK_THROWS_AS(setting_measure(Setting::S_minus, m1(), nullptr, Potential::reference(m1())), Error);
    CHECK_THROWS_AS(setting_measure(Setting::S_mu, m, nullptr, r), Error);
    CHECK_THROWS_AS(parse_setting("S_plus"), Error);
    CHECK(parse_setting("S_minus") == Setting::S_minus);
}

TEST_CASE("D_k identities") {
    auto m = m1();
    auto b = make_basis(6, 1);
    auto base = base_form(m, b);
    std::mt19937_64 rng(3);
    CHECK(std::abs(dk(b, base, base)) < 1e-15);
    CHECK(dk(b, base.scaled(5), base) == doctest::Approx(-std::log(5.0) / (2 * b.k)).epsilon(1e-12));
    for (int q = 0; q < 5; ++q) {
        auto l = random_lambda(rng, b.N);
        double d0 = dk(b, along_geodesic(base, l, 0), base), d1 = dk(b, along_geodesic(base, l, 1), base);
        CHECK(d1 - d0 == doctest::Approx(l.sum() / (b.k * b.N)).epsilon(1e-12));
        for (int i = 1; i <= 9; ++i) {
            double t = i / 10.0;
            CHECK(std::abs(dk(b, along_geodesic(base, l, t), base) - ((1 - t) * d0 + t * d1)) < 1e-12);
        }
    }
}

TEST_CASE("F_k and J_k") {
    auto m = m1d2();
    auto b = make_basis(5, 2);
    auto base = base_form(m, b);
    auto mu = bump_measure(m, 0.5, 5);
    std::mt19937_64 rng(4);
    for (int q = 0; q < 5; ++q) {
        auto l = random_lambda(rng, b.N);
        auto H = along_geodesic(base, l, 0.3);
        for (auto s : {Setting::S_mu, Setting::S_minus}) {
            double F = fk_functional(s, m, b, H, base, &mu);
            for (double c : {0.1, 7.0}) CHECK(std::abs(fk_functional(s, m, b, H.scaled(c), base, &mu) - F) < 1e-12);
            double a = fk_functional(s, m, b, along_geodesic(H, l, -0.5), base, &mu);
            double z = fk_functional(s, m, b, along_geodesic(H, l, 0.5), base, &mu);
            CHECK(F >= 0.5 * (a + z) - 1e-13);
        }
        CHECK(std::abs(jk_functional(m, b, H.scaled(3), base) - jk_functional(m, b, H, base)) < 1e-12);
    }
    auto l = random_lambda(rng, b.N);
    l.array() -= l.mean();
    l.normalize();
    double prev = jk_functional(m, b, base, base);
    for (double r : {5.0, 10.0, 20.0}) {
        auto H = along_geodesic(base, -r * l, 0.5);
        double J = jk_functional(m, b, H, base);
        CHECK(J > prev);
        prev = J;
    }
}

TEST_CASE("directional derivative of L o f_k") {
    auto m = m1();
    auto b = make_basis(4, 1);
    auto mu = gaussian_measure(m, 0.5, 1);
    auto H = base_form(m, b);
    std::mt19937_64 rng(5);
    for (int q = 0; q < 3; ++q) {
        auto l = random_lambda(rng, b.N);
        const double h = 1e-4;
        double fd = (l_of_fk(Setting::S_mu, m, b, along_geodesic(H, l, h), &mu) -
                     l_of_fk(Setting::S_mu, m, b, along_geodesic(H, l, -h), &mu)) /
                    (2 * h);
        double exact = deriv_closed_form(Setting::S_mu, m, b, H, &mu, l);
        CHECK(std::abs(fd - exact) < 1e-5 * std::abs(exact));
    }
}

TEST_CASE("balanced fixed point for the FS volume") {
    auto m = m1();
    auto fs = fs_volume_sampled(m);
    for (int k : {2, 6}) {
        auto b = make_basis(k, 1);
        auto r = balanced_solve(Setting::S_mu, m, b, &fs);
        CHECK(r.trace.converged);
        CHECK(sup_gap_const(r.phi, m->reference) < 1e-8);
        CHECK(equal_norms_gap(r.H, tk_map(Setting::S_mu, m, b, &fs, r.H)) < 1e-8);
        CHECK(fp_gap(r.H, binomial_form(b)) < 1e-8);
        const auto& rec = r.trace.records;
        for (std::size_t j = 1; j < rec.size(); ++j) CHECK(rec[j].F_k >= rec[j - 1].F_k - tol.tol_mass);
        CHECK(r.trace.to_csv().rfind("iter,F_k,J_k,fp_gap\n", 0) == 0);
    }
}

TEST_CASE("balanced solve is gauge invariant") {
    auto m = m1();
    auto mu = bump_measure(m, 0.5, 6);
    auto b = make_basis(5, 1);
    std::mt19937_64 rng(6);
    auto l = random_lambda(rng, b.N);
    BalancedOptions o1, o2;
    o1.init = along_geodesic(base_form(m, b), l, 0.2);
    o2.init = o1.init->scaled(40);
    auto r1 = balanced_solve(Setting::S_mu, m, b, &mu, o1), r2 = balanced_solve(Setting::S_mu, m, b, &mu, o2);
    CHECK(fp_gap(r1.H, r2.H) < 1e-9);
    CHECK(sup_gap_const(r1.phi, r2.phi.values) < 1e-9);
    CHECK_THROWS_AS(balanced_solve(Setting::S_plus, m, b, &mu), Error);
    CHECK_THROWS_AS(balanced_solve(Setting::S_mu, m, make_basis(600, 1), &mu), Error);
}

TEST_CASE("S_minus balanced metrics on the degree-2 model") {
    auto m = m1d2();
    auto b = make_basis(3, 2);
    auto r = balanced_solve(Setting::S_minus, m, b, nullptr);
    CHECK(r.trace.converged);
    CHECK(equal_norms_gap(r.H, tk_map(Setting::S_minus, m, b, nullptr, r.H)) < 1e-8);
    CHECK(sup_gap_const(r.phi, m->reference) < 1e-4);
}

TEST_CASE("Bergman kernel identities") {
    auto m = m1();
    const auto& mu0 = reference_ma(m);
    std::mt19937_64 rng(7);
    for (int k : {2, 8, 32}) {
        auto b = make_basis(k, 1);
        for (auto psi : {Potential::reference(m), random_potential(m, rng)}) {
            auto r = bergman(m, b, mu0, psi);
            CHECK(std::abs(r.beta.total - 1) < 1e-10);
            double worst = 0;
            for (std::size_t i = 0; i < m->size(); ++i)
                worst = std::max(worst, std::abs(r.Pk[i] - psi[i] - std::log(r.rho[i] / b.N) / k));
            CHECK(worst < 1e-12);
        }
    }
}

TEST_CASE("exhaustion ratio diagnostic") {
    auto m = m1();
    double a = estim_ratio_sup(m, make_basis(4, 1), 20, 1);
    CHECK(std::isfinite(a));
    CHECK(a == estim_ratio_sup(m, make_basis(4, 1), 20, 1));
}

TEST_CASE("dense path") {
    auto m = make_model(1, 1, 20, 256);
    auto b = make_basis(4, 1);
    std::mt19937_64 rng(8);
    auto g = angular_grid(m, 16, [](double t, double th) { return 1 + 0.5 * std::cos(th) * std::exp(-t * t / 8); });
    double tot = 0;
    for (double w : g.w) tot += w;
    CHECK(tot == doctest::Approx(1).epsilon(1e-14));

    std::normal_distribution<double> Z(0, 1);
    Eigen::MatrixXcd A(b.N, b.N);
    for (int i = 0; i < b.N; ++i)
        for (int j = 0; j < b.N; ++j) A(i, j) = {Z(rng), Z(rng)};
    auto H = HermitianForm::dense(A * A.adjoint() + Eigen::MatrixXcd::Identity(b.N, b.N));
    auto v1 = fs_values(b, H, g), v2 = fs_values_eigen(b, H, g);
    double worst = 0;
    for (std::size_t i = 0; i < v1.size(); ++i) worst = std::max(worst, std::abs(v1[i] - v2[i]));
    CHECK(worst < 1e-12);
    CHECK_NOTHROW(gram_dense(b, g, v1).check_positive());

    auto r = balanced_solve_dense(b, g);
    CHECK(r.trace.converged);
    auto T = gram_dense(b, g, fs_values(b, r.H, g));
    CHECK(equal_norms_gap(r.H, T) < 1e-8);
    // the angular factor couples neighbouring monomials
    CHECK(std::abs(r.H.full(0, 1)) > 1e-6);

    // the dense basis is binomially scaled, so the FS volume is balanced at the identity
    auto flat = angular_grid(m, 8, [](double, double) { return 1.0; });
    auto rf = balanced_solve_dense(b, flat);
    CHECK(fp_gap(rf.H, HermitianForm::dense(Eigen::MatrixXcd::Identity(b.N, b.N))) < 1e-8);
    auto vf = fs_values(b, rf.H, flat);
    double lo = 1e300, hi = -1e300;
    for (std::size_t p = 0; p < vf.size(); ++p) {
        double d = vf[p] - std::log1p(std::exp(flat.t[p]));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    CHECK(hi - lo < 1e-8);
}
