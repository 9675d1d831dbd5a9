#include "pluripot/measures.hpp"

#include <cmath>
#include <numeric>

namespace pluripot {

namespace {

// 8-point Gauss-Legendre on [-1,1]
constexpr double gl_x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                            0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr double gl_w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066278747558, 0.3626837833783620,
                            0.3626837833783620, 0.3137066278747558, 0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss(double a, double b, F&& f) {
    double c = 0.5 * (a + b), r = 0.5 * (b - a), s = 0;
    for (int k = 0; k < 8; ++k) s += gl_w[k] * f(c + r * gl_x[k]);
    return s * r;
}

void require_1d(const ModelPtr& m) {
    if (m->n != 1) throw Error(ErrorCode::invalid_dimension, "radial measures live on n=1 models");
}

}  // namespace

MeasureField hat_measure(const ModelPtr& model, const std::function<double(double)>& rho, bool truncate) {
    require_1d(model);
    const auto& g = model->grid;
    int M = model->M;
    std::vector<double> m(M + 1, 0.0);
    for (int c = 0; c < M; ++c) {
        double a = g[c], b = g[c + 1], h = b - a;
        // split each cell so the rule also resolves narrow features
        const int sub = 4;
        for (int s = 0; s < sub; ++s) {
            double lo = a + h * s / sub, hi = a + h * (s + 1) / sub;
            m[c] += gauss(lo, hi, [&](double t) { return rho(t) * (b - t) / h; });
            m[c + 1] += gauss(lo, hi, [&](double t) { return rho(t) * (t - a) / h; });
        }
    }
    if (!truncate) {
        // tails by substitution t = end -/+ u/(1-u)
        auto tail = [&](double end, double sign) {
            double s = 0;
            for (int p = 0; p < 64; ++p)
                s += gauss(p / 64.0, (p + 1) / 64.0, [&](double u) {
                    double du = 1 / ((1 - u) * (1 - u));
                    return rho(end + sign * u / (1 - u)) * du;
                });
            return s;
        };
        m[0] += tail(g[0], -1);
        m[M] += tail(g[M], 1);
    }
    double tot = std::accumulate(m.begin(), m.end(), 0.0);
    if (!(tot > 0)) throw Error(ErrorCode::invalid_argument, "density has no mass in the window");
    if (truncate)
        for (auto& x : m) x /= tot;
    return MeasureField::from_nodes(model, m);
}

MeasureField fs_volume_sampled(const ModelPtr& model) {
    require_1d(model);
    std::vector<double> m(model->size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        double t = model->grid[i];
        double e = std::exp(-std::abs(t));
        m[i] = model->quad_weights[i] * e / ((1 + e) * (1 + e));
    }
    // tail masses beyond -T and T
    double tail = 1 / (1 + std::exp(model->T));
    m.front() += tail;
    m.back() += tail;
    return MeasureField::from_nodes(model, m);
}

MeasureField gaussian_measure(const ModelPtr& model, double mean, double sd) {
    if (!(sd > 0)) throw Error(ErrorCode::invalid_argument, "sd must be positive");
    return hat_measure(
        model, [=](double t) { return std::exp(-0.5 * (t - mean) * (t - mean) / (sd * sd)); }, true);
}

MeasureField bump_measure(const ModelPtr& model, double center, double width) {
    if (!(width > 0)) throw Error(ErrorCode::invalid_argument, "width must be positive");
    return hat_measure(
        model,
        [=](double t) {
            double z = (t - center) / width;
            return std::abs(z) < 1 ? std::exp(-1 / (1 - z * z)) : 0.0;
        },
        true);
}

MeasureField bump_measure_2d(const ModelPtr& model, double cx, double cy, double width) {
    if (model->n != 2) throw Error(ErrorCode::invalid_dimension, "bump_measure_2d needs n=2");
    if (!(width > 0)) throw Error(ErrorCode::invalid_argument, "width must be positive");
    std::vector<double> m(model->size());
    double tot = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        auto p = model->point(k);
        double r2 = ((p[0] - cx) * (p[0] - cx) + (p[1] - cy) * (p[1] - cy)) / (width * width);
        m[k] = r2 < 1 ? model->quad_weights[k] * std::exp(-1 / (1 - r2)) : 0.0;
        tot += m[k];
    }
    if (!(tot > 0)) throw Error(ErrorCode::invalid_argument, "bump misses every node");
    for (auto& x : m) x /= tot;
    return MeasureField::from_nodes(model, m);
}

MeasureField mixture(const std::vector<std::pair<double, MeasureField>>& parts) {
    if (parts.empty()) throw Error(ErrorCode::invalid_argument, "empty mixture");
    auto model = parts[0].second.model;
    std::vector<double> cells(model->size(), 0.0), atoms(model->size(), 0.0);
    double wsum = 0;
    for (const auto& [w, mu] : parts) {
        check_same_grid(model, mu.model);
        if (!(w >= 0)) throw Error(ErrorCode::invalid_argument, "negative mixture weight");
        wsum += w;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            cells[i] += w * mu.cell_mass[i];
            atoms[i] += w * mu.boundary_atoms[i];
        }
    }
    if (!(wsum > 0)) throw Error(ErrorCode::invalid_argument, "mixture weights sum to zero");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        cells[i] /= wsum;
        atoms[i] /= wsum;
    }
    return MeasureField(model, cells, atoms);
}

MeasureField point_mass(const ModelPtr& model, std::size_t node) {
    std::vector<double> m(model->size(), 0.0);
    m.at(node) = 1;
    return MeasureField::from_nodes(model, m);
}

Potential random_potential(const ModelPtr& model, std::mt19937_64& rng, int terms) {
    std::uniform_real_distribution<double> U(0, 1);
    std::vector<double> w(terms);
    double ws = 0;
    for (auto& x : w) ws += (x = 0.2 + U(rng));
    for (auto& x : w) x *= model->degree / ws;
    std::vector<double> v(model->size(), 0.0);
    if (model->n == 1) {
        for (int k = 0; k < terms; ++k) {
            double s = 1.2 + 1.8 * U(rng), c = -3 + 6 * U(rng);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[k] / s * fs_value(1, 1, s * (model->grid[i] - c));
        }
    } else {
        for (int k = 0; k < terms; ++k) {
            double la = -0.5 + U(rng), lb = -0.5 + U(rng), lc = -0.5 + U(rng);
            for (std::size_t i = 0; i < v.size(); ++i) {
                auto x = model->point(i);
                v[i] += w[k] * (la + fs_value(2, 1, x[0] + lb - la, x[1] + lc - la));
            }
        }
    }
    return Potential(model, v);
}

std::vector<double> weight(const Potential& p) {
    std::vector<double> w(p.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * (p.values[i] - p.model->reference[i]);
    return w;
}

}  // namespace pluripot
