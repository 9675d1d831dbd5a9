#include "pluripot/power_diagram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"

namespace pluripot {

double Polygon::area() const {
    double s = 0;
    std::size_t n = vert.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& p = vert[k];
        const auto& q = vert[(k + 1) % n];
        s += p[0] * q[1] - p[1] * q[0];
    }
    return 0.5 * s;
}

Polygon polytope_polygon(int d) {
    Polygon p;
    p.vert = {{0.0, 0.0}, {double(d), 0.0}, {0.0, double(d)}};
    p.tag = {-1, -1, -1};
    return p;
}

// keep a0*p0 + a1*p1 >= b
Polygon clip(const Polygon& poly, double a0, double a1, double b, int tag) {
    Polygon out;
    std::size_t n = poly.vert.size();
    if (n == 0) return out;
    double f[64];
    std::vector<double> fv;
    double* fp = f;
    if (n > 64) {
        fv.resize(n);
        fp = fv.data();
    }
    bool all_in = true, all_out = true;
    for (std::size_t k = 0; k < n; ++k) {
        fp[k] = a0 * poly.vert[k][0] + a1 * poly.vert[k][1] - b;
        if (fp[k] < 0) all_in = false;
        else all_out = false;
    }
    if (all_in) return poly;
    if (all_out) return out;
    out.vert.reserve(n + 1);
    out.tag.reserve(n + 1);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t l = (k + 1) % n;
        bool cin = fp[k] >= 0, nin = fp[l] >= 0;
        const auto& P = poly.vert[k];
        const auto& Q = poly.vert[l];
        auto cut = [&] {
            double s = fp[k] / (fp[k] - fp[l]);
            return Vec2{P[0] + s * (Q[0] - P[0]), P[1] + s * (Q[1] - P[1])};
        };
        if (cin) {
            out.vert.push_back(P);
            out.tag.push_back(poly.tag[k]);
            if (!nin) {
                out.vert.push_back(cut());
                out.tag.push_back(tag);
            }
        } else if (nin) {
            out.vert.push_back(cut());
            out.tag.push_back(poly.tag[k]);
        }
    }
    return out;
}

Polygon intersect(const Polygon& a, const Polygon& b) {
    Polygon r = a;
    std::size_t n = b.vert.size();
    for (std::size_t k = 0; k < n && !r.vert.empty(); ++k) {
        const auto& P = b.vert[k];
        const auto& Q = b.vert[(k + 1) % n];
        // interior on the left of a counter-clockwise edge
        double a0 = -(Q[1] - P[1]), a1 = Q[0] - P[0];
        r = clip(r, a0, a1, a0 * P[0] + a1 * P[1], b.tag[k]);
    }
    return r;
}

namespace {

// Discrete Legendre transform max_q (p.x_q - u_q) of tensor-grid data, separated by rows:
// each row keeps its 1-D lower hull, queried by binary search on the hull slopes.
class RowLegendre {
public:
    RowLegendre(const ToricModel& m, const std::vector<double>& u, const std::vector<char>* active) : m_(m), A_(m.axis()) {
        rows_.resize(A_);
        for (int i = 0; i < A_; ++i) {
            auto& r = rows_[i];
            for (int j = 0; j < A_; ++j) {
                std::size_t k = std::size_t(i) * A_ + j;
                if ((active && !(*active)[k]) || !std::isfinite(u[k])) continue;
                double y = m.grid[j], v = u[k];
                while (r.idx.size() >= 2) {
                    int o = r.idx[r.idx.size() - 2], a = r.idx.back();
                    double cross = (m.grid[a] - m.grid[o]) * (v - r.val[r.val.size() - 2]) - (r.val.back() - r.val[r.val.size() - 2]) * (y - m.grid[o]);
                    if (cross <= 0) {
                        r.idx.pop_back();
                        r.val.pop_back();
                    } else {
                        break;
                    }
                }
                r.idx.push_back(j);
                r.val.push_back(v);
            }
            for (std::size_t q = 0; q + 1 < r.idx.size(); ++q)
                r.slope.push_back((r.val[q + 1] - r.val[q]) / (m.grid[r.idx[q + 1]] - m.grid[r.idx[q]]));
        }
    }

    // value and maximizing node
    std::pair<double, std::size_t> query(double a, double b) const {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (int i = 0; i < A_; ++i) {
            const auto& r = rows_[i];
            if (r.idx.empty()) continue;
            std::size_t q = std::lower_bound(r.slope.begin(), r.slope.end(), b) - r.slope.begin();
            double v = a * m_.grid[i] + b * m_.grid[r.idx[q]] - r.val[q];
            if (v > best) {
                best = v;
                arg = std::size_t(i) * A_ + r.idx[q];
            }
        }
        return {best, arg};
    }

private:
    struct Row {
        std::vector<int> idx;
        std::vector<double> val, slope;
    };
    const ToricModel& m_;
    int A_;
    std::vector<Row> rows_;
};

}  // namespace

std::vector<Polygon> power_cells(const ToricModel& m, const std::vector<double>& u, const std::vector<char>* active) {
    const int A = m.axis();
    const std::size_t N = m.size();
    auto live = [&](std::size_t q) { return (!active || (*active)[q]) && std::isfinite(u[q]); };
    std::vector<std::array<int, 2>> near;
    for (int di = -2; di <= 2; ++di)
        for (int dj = -2; dj <= 2; ++dj)
            if (di || dj) near.push_back({di, dj});
    RowLegendre lt(m, u, active);
    std::vector<Polygon> cells(N);
    Polygon P = polytope_polygon(m.degree);
    detail::parallel_for(N, [&](std::size_t k) {
        if (!live(k)) return;
        int i = int(k) / A, j = int(k) % A;
        double xi = m.grid[i], yi = m.grid[j];
        Polygon c = P;
        auto apply = [&](std::size_t q) {
            double a0 = xi - m.grid[q / A], a1 = yi - m.grid[q % A], b = u[k] - u[q];
            for (const auto& v : c.vert)
                if (a0 * v[0] + a1 * v[1] < b) {
                    c = clip(c, a0, a1, b, int(q));
                    return true;
                }
            return false;
        };
        for (const auto& o : near) {
            int ii = i + o[0], jj = j + o[1];
            if (ii < 0 || jj < 0 || ii >= A || jj >= A) continue;
            std::size_t q = std::size_t(ii) * A + jj;
            if (!live(q)) continue;
            apply(q);
            if (c.vert.empty()) break;
        }
        // every vertex must see node k as a maximizer of p.x_q - u_q
        const double tol = 1e-13 * (1 + std::abs(u[k]) + m.degree * m.T);
        for (int guard = 0; !c.vert.empty() && guard < int(N); ++guard) {
            bool changed = false;
            for (std::size_t e = 0; e < c.vert.size(); ++e) {
                const auto& v = c.vert[e];
                auto [val, arg] = lt.query(v[0], v[1]);
                if (arg != k && val > v[0] * xi + v[1] * yi - u[k] + tol && apply(arg)) {
                    changed = true;
                    break;
                }
            }
            if (!changed) break;
        }
        cells[k] = std::move(c);
    });
    return cells;
}

Adjacency cell_adjacency(const ToricModel& m, const std::vector<Polygon>& cells) {
    Adjacency adj;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto& c = cells[k];
        std::size_t n = c.vert.size();
        auto xk = m.point(k);
        for (std::size_t e = 0; e < n; ++e) {
            int q = c.tag[e];
            if (q < 0) continue;
            const auto& P = c.vert[e];
            const auto& Q = c.vert[(e + 1) % n];
            double len = std::hypot(Q[0] - P[0], Q[1] - P[1]);
            if (len == 0) continue;
            auto xq = m.point(q);
            double dist = std::hypot(xk[0] - xq[0], xk[1] - xq[1]);
            adj.i.push_back(int(k));
            adj.j.push_back(q);
            adj.w.push_back(len / (dist * m.mass_normalization));
        }
    }
    return adj;
}

}  // namespace pluripot
