#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pluripot/core.hpp"

namespace pluripot {

struct SolveOptions {
    int max_iter = 100;
    double tol_residual = 1e-9;
    double step0 = 1.0;
    double shrink = 0.5;
    int max_tries = 40;
    std::uint64_t seed = 0;
    bool force_ascent = false;  // n=1: use the ascent instead of direct integration
    std::optional<Potential> init;
    void validate() const;
};

struct SolveRecord {
    int iter = 0;
    double F_mu = 0;
    double residual_l1 = 0;
    double step = 0;
    double I_to_final = 0;
};

struct SolveTrace {
    std::vector<SolveRecord> records;
    bool converged = false;
    std::string method;
    std::string to_csv(const std::string& header = "") const;
};

struct SolveResult {
    Potential psi;
    SolveTrace trace;
};

double residual_l1(const MeasureField& a, const MeasureField& b);

SolveResult solve_ma(const ModelPtr& model, const MeasureField& mu, const SolveOptions& opts = {});
SolveResult solve_ma_ascent(const ModelPtr& model, const MeasureField& mu, const SolveOptions& opts = {});

// Shift so that L_0 vanishes.
Potential normalize_l0(const ModelPtr& model, const Potential& psi);

// Degree-2 model only: w_i e^{-psi_i}, with w_i = MA(reference)_i e^{reference_i}.
MeasureField canonical_measure(const ModelPtr& model, const Potential& psi);

// psi(t) -> psi(-t) + d t, the inversion z -> 1/z.
Potential inversion(const ModelPtr& model, const Potential& psi);

struct KEResult {
    Potential psi;
    double c = 0;
    SolveTrace trace;
    std::vector<double> F_minus;
    double residual = 0;
};
KEResult solve_ke_fano(const ModelPtr& model, const SolveOptions& opts = {});

struct MaximizingReport {
    std::vector<double> F;
    std::vector<double> I_to_max;
    bool F_increasing_tail = false;
    bool I_decreasing_tail = false;
    bool F_decreasing_flag = false;
    Potential maximizer;
};
MaximizingReport maximizing_sequence_diagnostic(const ModelPtr& model, const MeasureField& mu,
                                                const std::vector<Potential>& seq);

}  // namespace pluripot
