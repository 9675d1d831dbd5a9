#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "pluripot/core.hpp"
#include "pluripot/electrostatics.hpp"
#include "pluripot/functionals.hpp"
#include "pluripot/measures.hpp"
#include "pluripot/solver.hpp"

using namespace pluripot;

namespace {

ModelPtr m1() {
    static auto m = make_model(1, 1, 20, 2048);
    return m;
}

double gauss_density(double t, double mean, double sd) {
    double x = (t - mean) / sd;
    return std::exp(-0.5 * x * x) / (sd * std::sqrt(2 * M_PI));
}

double fs_density(double t) {
    double e = std::exp(-std::abs(t));
    return e / ((1 + e) * (1 + e));
}

// U at |z|^2 = e^t of a radial density in s = log|w|^2, by brute quadrature over (s, angle)
double brute_potential(double t, const std::function<double(double)>& rho) {
    static const double x8[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                 0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static const double w8[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066278747558, 0.3626837833783620,
                                 0.3626837833783620, 0.3137066278747558, 0.2223810344533745, 0.1012285362903763};
    const int Q = 2048;
    const double r = std::exp(0.5 * t);
    double total = 0;
    const double a = -20, b = 20, width = 0.05;
    for (double lo = a; lo < b - 1e-12; lo += width) {
        double c = lo + 0.5 * width;
        for (int k = 0; k < 8; ++k) {
            double s = c + 0.5 * width * x8[k];
            double rs = std::exp(0.5 * s), ang = 0;
            for (int q = 0; q < Q; ++q) {
                double th = 2 * M_PI * q / Q;
                ang += 0.5 * std::log(r * r + rs * rs - 2 * r * rs * std::cos(th));
            }
            total += 0.5 * width * w8[k] * rho(s) * ang / Q;
        }
    }
    return total;
}

ModelPtr fine() {
    static auto m = make_model(1, 1, 20, 8192);
    return m;
}

}  // namespace

TEST_CASE("potential of the FS volume") {
    SignedRadialMeasure omega(fs_volume_sampled(fine()));
    for (double R : {0.5, 1.0, 2.0}) CHECK(std::abs(log_potential(omega, 2 * std::log(R)) - 0.5 * std::log1p(R * R)) < 1e-6);
    CHECK_THROWS_AS(log_potential(omega, 25), Error);
}

TEST_CASE("potential of a circle") {
    auto m = m1();
    SignedRadialMeasure circle(point_mass(m, 900));
    double tR = m->grid[900];
    for (std::size_t i : {std::size_t(901), std::size_t(1200), std::size_t(2000)})
        CHECK(log_potential(circle, m->grid[i]) == doctest::Approx(0.5 * m->grid[i]).epsilon(1e-14));
    CHECK(log_potential(circle, m->grid[100]) == doctest::Approx(0.5 * tR).epsilon(1e-14));
}

TEST_CASE("radial kernel against two-dimensional quadrature") {
    auto m = fine();
    SignedRadialMeasure lambda(gaussian_measure(m, 0.5, 1.0), fs_volume_sampled(m));
    for (double t : {-1.3, 0.21, 2.7}) {
        double brute = brute_potential(t, [](double s) { return gauss_density(s, 0.5, 1.0) - fs_density(s); });
        double U = log_potential(lambda, t);
        CHECK(std::abs(U - brute) < 1e-4 * std::abs(brute));
    }
}

TEST_CASE("logarithmic energies") {
    auto m = m1();
    auto omega = fs_volume_sampled(m);
    CHECK(std::abs(log_energy(SignedRadialMeasure(omega)) + 0.5) < 1e-4);
    std::vector<MeasureField> probs = {gaussian_measure(m, 0, 1), bump_measure(m, 2, 3), gaussian_measure(m, -4, 0.5)};
    for (auto& mu : probs) {
        SignedRadialMeasure d(mu, omega);
        CHECK(log_energy(d) >= 0);
        // mass-zero measures are orthogonal to omega once the kernel is normalized by U_omega on both sides
        double Uw = 0;
        for (std::size_t i = 0; i < m->size(); ++i) Uw += 0.5 * std::log1p(std::exp(m->grid[i])) * (mu.mass(i) - omega.mass(i));
        CHECK(std::abs(log_energy_pair(d, SignedRadialMeasure(omega)) + Uw) < 1e-4);
    }
    SignedRadialMeasure a(probs[0], omega), b(probs[1], omega);
    CHECK(std::abs(log_energy_pair(a, b) - log_energy_pair(b, a)) < 1e-10);
    SignedRadialMeasure atom(point_mass(m, 0));
    CHECK_THROWS_AS(log_energy(atom), Error);
}

TEST_CASE("equilibrium of the whole window") {
    auto m = m1();
    auto eq = equilibrium(m, whole_window(m));
    double worst = 0;
    for (std::size_t i = 0; i < m->size(); ++i) worst = std::max(worst, std::abs(eq.P[i] - m->reference[i]));
    CHECK(worst < 1e-10);
    CHECK(std::abs(eq.E) < 1e-10);
}

TEST_CASE("equilibrium energy as a minimum over measures in K") {
    auto m = make_model(1, 1, 20, 1024);
    auto kv = annulus(m, std::exp(-1.5), std::exp(1.5));
    auto eq = equilibrium(m, kv);
    CHECK(std::abs(eq.mu.total - 1) < tol.tol_mass);
    double outside = 0;
    for (std::size_t i = 0; i < m->size(); ++i)
        if (!kv.K[i]) outside += eq.mu.mass(i);
    CHECK(outside < tol.tol_mass);

    auto at_eq = energy_star(m, eq.mu).first;
    CHECK(std::abs(at_eq - eq.E) < 1e-5);
    for (auto mu : {bump_measure(m, 0, 2.5), bump_measure(m, 1, 1.5), gaussian_measure(m, -0.5, 0.3)}) {
        double inK = 0;
        for (std::size_t i = 0; i < m->size(); ++i)
            if (kv.K[i]) inK += mu.mass(i);
        REQUIRE(inK > 1 - 1e-12);
        CHECK(energy_star(m, mu).first >= eq.E - 1e-5);
    }

    WeightedCompact shifted = kv;
    for (auto& x : shifted.v) x += 0.4;
    CHECK(equilibrium(m, shifted).E == doctest::Approx(eq.E + 0.4).epsilon(1e-10));
}

TEST_CASE("Alexander-Taylor values and capacity comparisons") {
    for (double R : {0.5, 1.0, 2.0}) {
        double tR = 2 * std::log(R);
        auto m = make_model(1, 1, aligned_halfwidth(20, 2048, tR), 2048);
        auto c = capacities(m, disk(m, R));
        CHECK(std::abs(c.T_alex - R / std::sqrt(1 + R * R)) < 1e-4);
        CHECK(c.T_alex * c.T_alex <= c.C_e + tol.tol_mass);
    }
    auto m = m1();
    std::vector<std::pair<double, double>> nested = {{0.8, 1.2}, {0.6, 1.5}, {0.4, 2.5}, {0.1, 9}};
    double prev = 0;
    for (auto [a, b] : nested) {
        auto c = capacities(m, annulus(m, a, b));
        CHECK(c.C_e >= prev);
        CHECK(c.T_alex * c.T_alex <= c.C_e + tol.tol_mass);
        prev = c.C_e;
    }
    auto rep = nlohmann::ordered_json::parse(capacity_report(m, annulus(m, 0.5, 2)).to_json());
    std::vector<std::string> keys;
    for (auto it = rep.begin(); it != rep.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"K_descriptor", "v_descriptor", "C_e", "T_alex", "Cap", "E_eq", "sup_PKv"});
}

TEST_CASE("Monge-Ampere capacity") {
    auto m = make_model(1, 1, 20, 1024);
    CHECK(std::abs(ma_capacity(m, whole_window(m).K) - 1) < 1e-8);
    CHECK_THROWS_AS(ma_capacity(m, std::vector<char>(m->size(), 0)), Error);
    auto K1 = annulus(m, 0.7, 1.4).K, K2 = annulus(m, 0.3, 2.0).K;
    double c1 = ma_capacity(m, K1), c2 = ma_capacity(m, K2);
    CHECK(c1 <= c2 + tol.tol_mass);
    CHECK(std::abs(c1 - ma_capacity_comp(m, K1)) < tol.tol_mass);
    CHECK(std::abs(c2 - ma_capacity_comp(m, K2)) < tol.tol_mass);

    // candidates of the defining supremum: reference - 2 <= psi <= reference
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(0, 1);
    const auto& ref = m->reference;
    int bad = 0;
    for (int q = 0; q < 20; ++q) {
        auto p = random_potential(m, rng);
        double top = -1e300;
        for (std::size_t i = 0; i < p.size(); ++i) top = std::max(top, p[i] - ref[i]);
        double s = U(rng);
        std::vector<double> v(p.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(ref[i] - 2, (1 - s) * (ref[i] - 2) + s * (p[i] - top));
        auto ma = monge_ampere(m, Potential(m, v));
        double inK = 0;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (K1[i]) inK += ma.mass(i);
        if (inK > c1 + tol.tol_mass) ++bad;
    }
    CHECK(bad == 0);
}
