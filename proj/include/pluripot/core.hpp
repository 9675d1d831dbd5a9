#pragma once

#include <array>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace pluripot {

enum class ErrorCode {
    invalid_dimension,
    window_too_small,
    grid_mismatch,
    polarization_negativity,
    all_plus_infinity,
    empty_K,
    non_full_mass,
    mass_not_one,
    no_convergence,
    measure_touches_boundary,
    wrong_degree,
    not_positive_definite,
    quadrature_underflow,
    setting_mismatch,
    outside_window,
    non_compact_support,
    invalid_argument,
    io_error,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode c, const std::string& what)
        : std::runtime_error(std::string(error_name(c)) + ": " + what), code_(c) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

struct Tolerances {
    double tol_hull = 1e-10;
    double tol_mass = 1e-8;
    double slope_tol = 1e-6;
    double atom_tol = 1e-8;
};
inline constexpr Tolerances tol{};

struct MeasureField;

// Grid on [-T,T]^n, M+1 nodes per axis. Node (i,j) of a 2-d model has flat index i*(M+1)+j,
// i along the first coordinate.

struct ToricModel {
    int n = 1;
    int degree = 1;
    int M = 0;
    double T = 0;
    double h = 0;
    std::string quadrature;
    std::vector<double> grid;
    std::vector<double> quad_weights;
    std::vector<double> reference;
    double mass_normalization = 1;  // |P|: length d for n=1, area d^2/2 for n=2

    std::size_t size() const { return quad_weights.size(); }
    int axis() const { return M + 1; }
    std::array<double, 2> point(std::size_t k) const;
    bool on_boundary(std::size_t k) const;
    std::string describe() const;

    mutable std::once_flag ref_ma_once;
    mutable std::shared_ptr<const MeasureField> ref_ma;
};
using ModelPtr = std::shared_ptr<const ToricModel>;

ModelPtr make_model(int n, int degree, double window_halfwidth, int nodes_per_axis,
                    const std::string& quadrature = "trapezoid");

// Halfwidth close to T_target for which `anchor` is a grid node of an M-node model.
double aligned_halfwidth(double T_target, int M, double anchor);

double fs_value(int n, int degree, double x, double y = 0);

struct Potential {
    ModelPtr model;
    std::vector<double> values;

    Potential() = default;
    Potential(ModelPtr m, std::vector<double> v);
    static Potential reference(const ModelPtr& m);
    Potential operator+(double c) const;
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

// Masses per node. cell_mass lives on interior nodes, boundary_atoms on boundary nodes
// (mass carried by slopes the window cannot resolve).
struct MeasureField {
    ModelPtr model;
    std::vector<double> cell_mass;
    std::vector<double> boundary_atoms;
    double total = 0;

    MeasureField() = default;
    MeasureField(ModelPtr m, std::vector<double> cells, std::vector<double> atoms);
    static MeasureField from_nodes(ModelPtr m, const std::vector<double>& node_mass);
    double mass(std::size_t i) const { return cell_mass[i] + boundary_atoms[i]; }
    std::vector<double> node_masses() const;
    double atom_total() const;
    double max_atom() const;
    MeasureField scaled(double c) const;
    MeasureField normalized() const;
};

void check_same_grid(const ModelPtr& a, const ModelPtr& b);

MeasureField monge_ampere(const ModelPtr& model, const Potential& psi);
MeasureField mixed_monge_ampere(const ModelPtr& model, const std::vector<Potential>& psi_list);

// Largest convex minorant with slopes in the polytope. +infinity marks unconstrained nodes.
Potential psh_envelope(const ModelPtr& model, const std::vector<double>& u);

// K is a node mask; v is given in weight units, so the obstacle is reference + 2v on K.
Potential extremal_function(const ModelPtr& model, const std::vector<char>& K,
                            const std::vector<double>& v);

Potential geodesic(const ModelPtr& model, const Potential& psi0, const Potential& psi1, double t);

bool is_full_mass(const MeasureField& m);

// Integral over the polytope of the Legendre transform of the clipped hull of psi.
double legendre_integral(const ModelPtr& model, const Potential& psi);

// MA(reference), computed once per model.
const MeasureField& reference_ma(const ModelPtr& model);

std::string serialize(const Potential& p, const std::string& extra_header = "");
std::string serialize(const MeasureField& m, const std::string& extra_header = "");
Potential parse_potential(const ModelPtr& model, const std::string& text);
MeasureField parse_measure(const ModelPtr& model, const std::string& text);

}  // namespace pluripot
