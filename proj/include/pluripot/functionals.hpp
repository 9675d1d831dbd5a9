#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pluripot/core.hpp"

namespace pluripot {

// All scalar functionals act on weights phi = (psi - reference)/2.

struct EnergyReport {
    double E = 0;
    std::optional<double> L_mu, L_0, F_mu, I, J, E_star;
    std::vector<std::string> notes;
    std::string to_json() const;
};

double energy(const ModelPtr& model, const Potential& psi);
// E through the Legendre transform: -(1/|P|) * integral over P of (psi* - reference*)/2.
double energy_legendre(const ModelPtr& model, const Potential& psi);

double pairing(const ModelPtr& model, const Potential& a, const Potential& b, const MeasureField& mu);  // int (a-b)/2 dmu

double functional_I(const ModelPtr& model, const Potential& phi, const Potential& psi);
double functional_J(const ModelPtr& model, const Potential& base, const Potential& phi);
// Gradient form sum_j (j+1)/(n+1) int d(phi-psi) ^ d^c(phi-psi) ^ ..., by summation by parts.
double functional_J_gradient(const ModelPtr& model, const Potential& base, const Potential& phi);

// p_j = int (phi - psi) MA(phi^{n-j}, psi^j), j = 0..n; nondecreasing in j.
std::vector<double> monotone_chain(const ModelPtr& model, const Potential& phi, const Potential& psi);
// (1/(n+1)) sum_j p_j, which equals E(phi) - E(psi).
double energy_cocycle(const ModelPtr& model, const Potential& phi, const Potential& psi);

double l_mu(const ModelPtr& model, const MeasureField& mu, const Potential& psi);
double l_zero(const ModelPtr& model, const Potential& psi);
double f_mu(const ModelPtr& model, const MeasureField& mu, const Potential& psi);

struct SolveOptions;
std::pair<double, Potential> energy_star(const ModelPtr& model, const MeasureField& mu);
std::pair<double, Potential> energy_star(const ModelPtr& model, const MeasureField& mu, const SolveOptions& opts);

double l_minus(const ModelPtr& model, const Potential& psi);
double f_minus(const ModelPtr& model, const Potential& psi);

EnergyReport energy_report(const ModelPtr& model, const Potential& psi, const MeasureField* mu);

struct CoercivityReport {
    std::vector<double> J, F;
    double slope = 0;
    double intercept = 0;
};
CoercivityReport coercivity_diagnostic(const ModelPtr& model, const MeasureField& mu, int samples, std::uint64_t seed);

}  // namespace pluripot
