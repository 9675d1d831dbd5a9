#include "pluripot/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace pluripot {

const char* error_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_dimension: return "invalid-dimension";
        case ErrorCode::window_too_small: return "window-too-small";
        case ErrorCode::grid_mismatch: return "grid-mismatch";
        case ErrorCode::polarization_negativity: return "polarization-negativity";
        case ErrorCode::all_plus_infinity: return "all-plus-infinity";
        case ErrorCode::empty_K: return "empty-K";
        case ErrorCode::non_full_mass: return "non-full-mass";
        case ErrorCode::mass_not_one: return "mass-not-one";
        case ErrorCode::no_convergence: return "no-convergence";
        case ErrorCode::measure_touches_boundary: return "measure-touches-boundary";
        case ErrorCode::wrong_degree: return "wrong-degree";
        case ErrorCode::not_positive_definite: return "not-positive-definite";
        case ErrorCode::quadrature_underflow: return "quadrature-underflow";
        case ErrorCode::setting_mismatch: return "setting-mismatch";
        case ErrorCode::outside_window: return "outside-window";
        case ErrorCode::non_compact_support: return "non-compact-support";
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::io_error: return "io-error";
    }
    return "unknown";
}

double fs_value(int n, int degree, double x, double y) {
    if (n == 1) {
        // log(1+e^x) without overflow
        return degree * (x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)));
    }
    double m = std::max({0.0, x, y});
    return degree * (m + std::log(std::exp(-m) + std::exp(x - m) + std::exp(y - m)));
}

std::array<double, 2> ToricModel::point(std::size_t k) const {
    if (n == 1) return {grid[k], 0.0};
    std::size_t a = static_cast<std::size_t>(axis());
    return {grid[k / a], grid[k % a]};
}

bool ToricModel::on_boundary(std::size_t k) const {
    if (n == 1) return k == 0 || k == static_cast<std::size_t>(M);
    std::size_t a = static_cast<std::size_t>(axis());
    std::size_t i = k / a, j = k % a;
    return i == 0 || j == 0 || i + 1 == a || j + 1 == a;
}

std::string ToricModel::describe() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "n=%d degree=%d M=%d T=%.17g", n, degree, M, T);
    return buf;
}

ModelPtr make_model(int n, int degree, double T, int nodes_per_axis, const std::string& quadrature) {
    if (n != 1 && n != 2) throw Error(ErrorCode::invalid_dimension, "n must be 1 or 2");
    if (degree < 1) throw Error(ErrorCode::invalid_argument, "degree must be positive");
    if (!(T > 0)) throw Error(ErrorCode::invalid_argument, "window halfwidth must be positive");
    if (nodes_per_axis < 16) throw Error(ErrorCode::invalid_argument, "need at least 16 cells per axis");
    if (quadrature != "trapezoid" && quadrature != "simpson")
        throw Error(ErrorCode::invalid_argument, "unknown quadrature " + quadrature);
    if (quadrature == "simpson" && nodes_per_axis % 2)
        throw Error(ErrorCode::invalid_argument, "simpson needs an even cell count");
    // slope of the reference at the window corners
    double edge = degree * std::exp(-T) * (n == 1 ? 1.0 : 2.0);
    if (edge > tol.slope_tol) throw Error(ErrorCode::window_too_small, "reference slopes do not reach the polytope");

    auto m = std::make_shared<ToricModel>();
    m->n = n;
    m->degree = degree;
    m->M = nodes_per_axis;
    m->T = T;
    m->h = 2 * T / nodes_per_axis;
    m->quadrature = quadrature;
    int M = nodes_per_axis;
    m->grid.resize(M + 1);
    // exactly antisymmetric grid
    for (int i = 0; i <= M; ++i) m->grid[i] = T * (2.0 * i - M) / M;
    std::vector<double> w1(M + 1, m->h);
    if (quadrature == "trapezoid") {
        w1[0] = w1[M] = m->h / 2;
    } else {
        for (int i = 0; i <= M; ++i) w1[i] = m->h / 3 * (i == 0 || i == M ? 1 : (i % 2 ? 4 : 2));
    }
    if (n == 1) {
        m->quad_weights = w1;
        m->reference.resize(M + 1);
        for (int i = 0; i <= M; ++i) m->reference[i] = fs_value(1, degree, m->grid[i]);
        m->mass_normalization = degree;
    } else {
        std::size_t a = M + 1;
        m->quad_weights.resize(a * a);
        m->reference.resize(a * a);
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < a; ++j) {
                m->quad_weights[i * a + j] = w1[i] * w1[j];
                m->reference[i * a + j] = fs_value(2, degree, m->grid[i], m->grid[j]);
            }
        m->mass_normalization = 0.5 * degree * degree;
    }
    return m;
}

double aligned_halfwidth(double T_target, int M, double anchor) {
    if (anchor == 0) return T_target;
    // anchor = T(2i-M)/M for some node i
    double best = T_target;
    double err = 1e300;
    for (int i = 0; i <= M; ++i) {
        if (2 * i == M) continue;
        double T = anchor * M / (2.0 * i - M);
        if (T > 0 && std::abs(T - T_target) < err) {
            err = std::abs(T - T_target);
            best = T;
        }
    }
    return best;
}

void check_same_grid(const ModelPtr& a, const ModelPtr& b) {
    if (!a || !b) throw Error(ErrorCode::grid_mismatch, "missing model");
    if (a == b) return;
    if (a->n != b->n || a->M != b->M || a->T != b->T || a->degree != b->degree)
        throw Error(ErrorCode::grid_mismatch, a->describe() + " vs " + b->describe());
}

Potential::Potential(ModelPtr m, std::vector<double> v) : model(std::move(m)), values(std::move(v)) {
    if (values.size() != model->size()) throw Error(ErrorCode::grid_mismatch, "potential size");
}

Potential Potential::reference(const ModelPtr& m) { return Potential(m, m->reference); }

Potential Potential::operator+(double c) const {
    Potential p = *this;
    for (auto& x : p.values) x += c;
    return p;
}

MeasureField::MeasureField(ModelPtr m, std::vector<double> cells, std::vector<double> atoms)
    : model(std::move(m)), cell_mass(std::move(cells)), boundary_atoms(std::move(atoms)) {
    if (cell_mass.size() != model->size() || boundary_atoms.size() != model->size())
        throw Error(ErrorCode::grid_mismatch, "measure size");
    total = 0;
    for (std::size_t i = 0; i < cell_mass.size(); ++i) total += cell_mass[i] + boundary_atoms[i];
}

MeasureField MeasureField::from_nodes(ModelPtr m, const std::vector<double>& node_mass) {
    std::vector<double> cells(m->size(), 0.0), atoms(m->size(), 0.0);
    if (node_mass.size() != m->size()) throw Error(ErrorCode::grid_mismatch, "measure size");
    for (std::size_t i = 0; i < node_mass.size(); ++i) {
        if (!(node_mass[i] >= 0)) throw Error(ErrorCode::invalid_argument, "negative mass");
        (m->on_boundary(i) ? atoms : cells)[i] = node_mass[i];
    }
    return MeasureField(m, std::move(cells), std::move(atoms));
}

std::vector<double> MeasureField::node_masses() const {
    std::vector<double> r(cell_mass.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = mass(i);
    return r;
}

double MeasureField::atom_total() const {
    return std::accumulate(boundary_atoms.begin(), boundary_atoms.end(), 0.0);
}

double MeasureField::max_atom() const {
    return boundary_atoms.empty() ? 0.0 : *std::max_element(boundary_atoms.begin(), boundary_atoms.end());
}

MeasureField MeasureField::scaled(double c) const {
    MeasureField r = *this;
    for (auto& x : r.cell_mass) x *= c;
    for (auto& x : r.boundary_atoms) x *= c;
    r.total = 0;
    for (std::size_t i = 0; i < r.cell_mass.size(); ++i) r.total += r.cell_mass[i] + r.boundary_atoms[i];
    return r;
}

MeasureField MeasureField::normalized() const {
    if (!(total > 0)) throw Error(ErrorCode::invalid_argument, "cannot normalize a zero measure");
    return scaled(1.0 / total);
}

bool is_full_mass(const MeasureField& m) { return m.atom_total() < tol.atom_tol; }

namespace {

std::string header(const ToricModel& m, const char* kind, const std::string& extra) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "# pluripot v1 %s n=%d degree=%d M=%d T=%.17g\n", kind, m.n, m.degree, m.M, m.T);
    std::string s = buf;
    if (!extra.empty()) {
        s += extra;
        if (s.back() != '\n') s += '\n';
    }
    return s;
}

std::string columns(const ToricModel& m, const std::vector<double>& v) {
    std::string s;
    char buf[96];
    for (std::size_t k = 0; k < v.size(); ++k) {
        auto p = m.point(k);
        if (m.n == 1)
            std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p[0], v[k]);
        else
            std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p[0], p[1], v[k]);
        s += buf;
    }
    return s;
}

std::vector<double> parse_columns(const ToricModel& m, const std::string& text, const char* kind) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::io_error, "empty input");
    char k[32];
    int n, d, M;
    double T;
    if (std::sscanf(line.c_str(), "# pluripot v1 %31s n=%d degree=%d M=%d T=%lf", k, &n, &d, &M, &T) != 5)
        throw Error(ErrorCode::io_error, "bad header: " + line);
    if (std::string(k) != kind) throw Error(ErrorCode::io_error, std::string("expected ") + kind);
    if (n != m.n || d != m.degree || M != m.M || T != m.T) throw Error(ErrorCode::grid_mismatch, line);
    std::vector<double> v;
    v.reserve(m.size());
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        double a, b, c;
        if (m.n == 1) {
            if (!(ls >> a >> b)) throw Error(ErrorCode::io_error, "bad line: " + line);
            v.push_back(b);
        } else {
            if (!(ls >> a >> b >> c)) throw Error(ErrorCode::io_error, "bad line: " + line);
            v.push_back(c);
        }
    }
    if (v.size() != m.size()) throw Error(ErrorCode::grid_mismatch, "node count");
    return v;
}

}  // namespace

std::string serialize(const Potential& p, const std::string& extra) {
    return header(*p.model, "potential", extra) + columns(*p.model, p.values);
}

std::string serialize(const MeasureField& m, const std::string& extra) {
    return header(*m.model, "measure", extra) + columns(*m.model, m.node_masses());
}

Potential parse_potential(const ModelPtr& model, const std::string& text) {
    return Potential(model, parse_columns(*model, text, "potential"));
}

MeasureField parse_measure(const ModelPtr& model, const std::string& text) {
    return MeasureField::from_nodes(model, parse_columns(*model, text, "measure"));
}

}  // namespace pluripot
