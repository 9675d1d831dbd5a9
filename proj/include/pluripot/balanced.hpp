#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pluripot/core.hpp"

namespace pluripot {

struct SectionBasis {
    int k = 1;
    int degree = 1;
    int N = 2;  // dk + 1 monomials z^j, |z^j|^2 = e^{jt}
};
SectionBasis make_basis(int k, int degree);

// Positive Hermitian form in the monomial basis; entry (j,j) is the squared norm of z^j.
struct HermitianForm {
    bool radial = true;
    Eigen::VectorXd diag;
    Eigen::MatrixXcd full;

    static HermitianForm diagonal(Eigen::VectorXd d);
    static HermitianForm dense(Eigen::MatrixXcd m);
    int size() const { return radial ? int(diag.size()) : int(full.rows()); }
    Eigen::MatrixXcd matrix() const;
    HermitianForm scaled(double c) const;
    void check_positive() const;
};

// Squared norms 1/(N C(dk,j)); f_k of it is the reference potential.
HermitianForm binomial_form(const SectionBasis& b);

enum class Setting { S_mu, S_minus, S_plus };
Setting parse_setting(const std::string& s);

Potential fs_map(const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H);
HermitianForm gram_map(const ModelPtr& model, const SectionBasis& basis, const MeasureField& mu, const Potential& psi);
MeasureField setting_measure(Setting s, const ModelPtr& model, const MeasureField* mu_input, const Potential& psi);

// h_k(MA(reference), reference).
HermitianForm base_form(const ModelPtr& model, const SectionBasis& basis);

double dk(const SectionBasis& basis, const HermitianForm& H, const HermitianForm& base);
double fk_functional(Setting s, const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H,
                     const HermitianForm& base, const MeasureField* mu_input);
double jk_functional(const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H, const HermitianForm& base);

// t_k = h_k o f_k
HermitianForm tk_map(Setting s, const ModelPtr& model, const SectionBasis& basis, const MeasureField* mu_input,
                     const HermitianForm& H);

// Scale-invariant distance: spread of log generalized eigenvalues of (H, G).
double fp_gap(const HermitianForm& H, const HermitianForm& G);

struct BalancedOptions {
    int max_iter = 20000;
    double tol_fp = 1e-12;
    int fallback_iter = 200;
    std::optional<HermitianForm> init;
};

struct BalancedRecord {
    int iter = 0;
    double F_k = 0;
    double J_k = 0;
    double fp_gap = 0;
};

struct BalancedTrace {
    std::vector<BalancedRecord> records;
    std::string method;
    bool converged = false;
    std::string to_csv(const std::string& header = "") const;
};

struct BalancedResult {
    HermitianForm H;
    Potential phi;
    BalancedTrace trace;
};

BalancedResult balanced_solve(Setting s, const ModelPtr& model, const SectionBasis& basis, const MeasureField* mu_input,
                              const BalancedOptions& opts = {});

// max/min - 1 of the norms ||s_j||^2_{t_k(H)} over an H-orthonormal, t_k(H)-orthogonal basis.
double equal_norms_gap(const HermitianForm& H, const HermitianForm& T);

struct BergmanResult {
    std::vector<double> rho;
    MeasureField beta;
    Potential Pk;
};
BergmanResult bergman(const ModelPtr& model, const SectionBasis& basis, const MeasureField& mu0, const Potential& psi);

// L o f_k along H_t = diag(H_jj e^{-2 t lambda_j}).
double l_of_fk(Setting s, const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H, const MeasureField* mu_input);
double deriv_closed_form(Setting s, const ModelPtr& model, const SectionBasis& basis, const HermitianForm& H,
                         const MeasureField* mu_input, const Eigen::VectorXd& lambda);
HermitianForm along_geodesic(const HermitianForm& H, const Eigen::VectorXd& lambda, double t);

// Observed (J o f_k)(H) / J_k(H) over random H; returns the sample supremum.
double estim_ratio_sup(const ModelPtr& model, const SectionBasis& basis, int samples, std::uint64_t seed);

// Non-radial path: measures sampled on a (t, theta) product grid, dense forms.
struct AngularGrid {
    std::vector<double> t, theta, w;
};
AngularGrid angular_grid(const ModelPtr& model, int n_theta, const std::function<double(double, double)>& density_factor);
// psi at the grid points for a dense H
std::vector<double> fs_values(const SectionBasis& basis, const HermitianForm& H, const AngularGrid& g);
std::vector<double> fs_values_eigen(const SectionBasis& basis, const HermitianForm& H, const AngularGrid& g);
HermitianForm gram_dense(const SectionBasis& basis, const AngularGrid& g, const std::vector<double>& psi);
BalancedResult balanced_solve_dense(const SectionBasis& basis, const AngularGrid& g, const BalancedOptions& opts = {});

}  // namespace pluripot
