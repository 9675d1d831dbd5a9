#pragma once

#include <string>
#include <vector>

#include "pluripot/core.hpp"

namespace pluripot {

// Radial measures on C, t = log|z|^2. Node masses are read as hat-function moments.

struct WeightedCompact {
    std::vector<char> K;
    std::vector<double> v;  // weight units, only read on K
    std::string K_descriptor = "custom";
    std::string v_descriptor = "custom";
};

WeightedCompact disk(const ModelPtr& model, double R);
WeightedCompact annulus(const ModelPtr& model, double r_in, double r_out);
WeightedCompact whole_window(const ModelPtr& model);

struct SignedRadialMeasure {
    MeasureField positive_part;
    MeasureField negative_part;
    SignedRadialMeasure(MeasureField pos, MeasureField neg);
    explicit SignedRadialMeasure(MeasureField pos);
    std::vector<double> masses() const;
    const ModelPtr& model() const { return positive_part.model; }
};

// U_lambda at |z|^2 = e^t.
double log_potential(const SignedRadialMeasure& lambda, double t);
std::vector<double> log_potential_nodes(const SignedRadialMeasure& lambda);

double log_energy(const SignedRadialMeasure& lambda);
double log_energy_pair(const SignedRadialMeasure& a, const SignedRadialMeasure& b);

struct Equilibrium {
    Potential P;
    MeasureField mu;
    double E = 0;
};
Equilibrium equilibrium(const ModelPtr& model, const WeightedCompact& kv);

struct Capacities {
    double C_e = 0;
    double T_alex = 0;
    double E_eq = 0;
    double sup_PKv = 0;
};
Capacities capacities(const ModelPtr& model, const WeightedCompact& kv);

// Relative extremal function h_K: envelope of (reference off K, reference - 2 on K), i.e. weight -1 on K.
Potential relative_extremal(const ModelPtr& model, const std::vector<char>& K);
double ma_capacity(const ModelPtr& model, const std::vector<char>& K);
// The same capacity through int (-h_K) MA(h_K).
double ma_capacity_comp(const ModelPtr& model, const std::vector<char>& K);

struct CapacityReport {
    std::string K_descriptor, v_descriptor;
    double C_e = 0, T_alex = 0, Cap = 0, E_eq = 0, sup_PKv = 0;
    std::string to_json() const;
};
CapacityReport capacity_report(const ModelPtr& model, const WeightedCompact& kv);

}  // namespace pluripot
