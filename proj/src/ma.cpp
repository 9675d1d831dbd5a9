#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "parallel.hpp"
#include "pluripot/core.hpp"
#include "pluripot/power_diagram.hpp"

namespace pluripot {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// Lower hull vertices of the finite points, collinear points kept.
std::vector<int> lower_hull(const std::vector<double>& x, const std::vector<double>& u) {
    std::vector<int> h;
    for (int i = 0; i < int(x.size()); ++i) {
        if (!std::isfinite(u[i])) continue;
        while (h.size() >= 2) {
            int o = h[h.size() - 2], a = h.back();
            // pop only on strict non-convexity
            double cross = (x[a] - x[o]) * (u[i] - u[o]) - (u[a] - u[o]) * (x[i] - x[o]);
            if (cross < 0) h.pop_back();
            else break;
        }
        h.push_back(i);
    }
    return h;
}

bool convex_1d(const std::vector<double>& u, double h) {
    double prev = -inf;
    for (std::size_t c = 0; c + 1 < u.size(); ++c) {
        double s = (u[c + 1] - u[c]) / h;
        if (!(s >= prev)) return false;
        prev = s;
    }
    return true;
}

// Subgradient intervals [lo_i, hi_i] of the clipped hull at every node (empty when lo >= hi).
void subgradients_1d(const ToricModel& m, const std::vector<double>& u, std::vector<double>& lo,
                     std::vector<double>& hi) {
    const std::size_t N = u.size();
    const double d = m.degree;
    lo.assign(N, 0.0);
    hi.assign(N, 0.0);
    if (convex_1d(u, m.h)) {
        double prev = 0;
        for (std::size_t i = 0; i < N; ++i) {
            double s = i + 1 < N ? (u[i + 1] - u[i]) / m.h : d;
            s = std::clamp(s, 0.0, d);
            lo[i] = prev;
            hi[i] = std::max(prev, s);
            prev = hi[i];
        }
        return;
    }
    auto hv = lower_hull(m.grid, u);
    double prev = 0;
    for (std::size_t k = 0; k < hv.size(); ++k) {
        double s = k + 1 < hv.size() ? (u[hv[k + 1]] - u[hv[k]]) / (m.grid[hv[k + 1]] - m.grid[hv[k]]) : d;
        s = std::clamp(s, 0.0, d);
        lo[hv[k]] = prev;
        hi[hv[k]] = std::max(prev, s);
        prev = hi[hv[k]];
    }
}

MeasureField ma_1d(const ModelPtr& model, const std::vector<double>& u) {
    std::vector<double> lo, hi;
    subgradients_1d(*model, u, lo, hi);
    std::vector<double> mass(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) mass[i] = (hi[i] - lo[i]) / model->degree;
    return MeasureField::from_nodes(model, mass);
}

MeasureField ma_2d(const ModelPtr& model, const std::vector<double>& u) {
    auto cells = power_cells(*model, u);
    std::vector<double> mass(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) mass[k] = std::max(0.0, cells[k].area()) / model->mass_normalization;
    return MeasureField::from_nodes(model, mass);
}

void snap(std::vector<double>& res, const std::vector<double>& u, double scale) {
    for (std::size_t i = 0; i < res.size(); ++i)
        if (std::isfinite(u[i]) && std::abs(res[i] - u[i]) <= 4e-14 * (1 + std::abs(u[i]) + scale)) res[i] = u[i];
}

std::vector<double> envelope_1d(const ToricModel& m, const std::vector<double>& u) {
    const double d = m.degree;
    auto hv = lower_hull(m.grid, u);
    std::size_t nv = hv.size();
    auto slope = [&](std::size_t k) { return (u[hv[k + 1]] - u[hv[k]]) / (m.grid[hv[k + 1]] - m.grid[hv[k]]); };
    std::size_t a = nv - 1;
    for (std::size_t k = 0; k + 1 < nv; ++k)
        if (slope(k) >= 0) {
            a = k;
            break;
        }
    std::size_t b = 0;
    for (std::size_t k = nv - 1; k > 0; --k)
        if (slope(k - 1) <= d) {
            b = k;
            break;
        }
    if (b < a) b = a;
    std::vector<double> res(u.size());
    std::size_t k = a;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double x = m.grid[i];
        int ia = hv[a], ib = hv[b];
        if (int(i) <= ia) {
            res[i] = u[ia];
        } else if (int(i) >= ib) {
            res[i] = u[ib] + d * (x - m.grid[ib]);
        } else {
            while (hv[k + 1] < int(i)) ++k;
            int p = hv[k], q = hv[k + 1];
            if (int(i) == p) res[i] = u[p];
            else if (int(i) == q) res[i] = u[q];
            else res[i] = u[p] + (u[q] - u[p]) * (x - m.grid[p]) / (m.grid[q] - m.grid[p]);
        }
    }
    snap(res, u, d * m.T);
    return res;
}

std::vector<double> envelope_2d(const ToricModel& m, const std::vector<double>& u) {
    std::vector<char> active(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) active[k] = std::isfinite(u[k]);
    auto cells = power_cells(m, u, &active);
    // affine pieces c + v.x of the envelope, one per cell vertex
    std::vector<std::array<double, 3>> pieces;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (!active[k]) continue;
        auto xk = m.point(k);
        for (const auto& v : cells[k].vert) pieces.push_back({v[0], v[1], u[k] - v[0] * xk[0] - v[1] * xk[1]});
    }
    std::vector<double> res(u.size());
    detail::parallel_for(u.size(), [&](std::size_t i) {
        // a nonempty subgradient cell puts the node on the hull
        if (active[i] && !cells[i].vert.empty() && cells[i].area() > 0) {
            res[i] = u[i];
            return;
        }
        auto x = m.point(i);
        double best = -inf;
        for (const auto& p : pieces) best = std::max(best, p[2] + p[0] * x[0] + p[1] * x[1]);
        res[i] = std::isfinite(u[i]) ? std::min(best, u[i]) : best;
    });
    snap(res, u, 2.0 * m.degree * m.T);
    return res;
}

}  // namespace

MeasureField monge_ampere(const ModelPtr& model, const Potential& psi) {
    check_same_grid(model, psi.model);
    for (double x : psi.values)
        if (!std::isfinite(x)) throw Error(ErrorCode::invalid_argument, "non-finite potential value");
    return model->n == 1 ? ma_1d(model, psi.values) : ma_2d(model, psi.values);
}

MeasureField mixed_monge_ampere(const ModelPtr& model, const std::vector<Potential>& list) {
    if (int(list.size()) != model->n) throw Error(ErrorCode::invalid_argument, "need n potentials");
    if (model->n == 1) return monge_ampere(model, list[0]);
    const auto& a = list[0];
    const auto& b = list[1];
    check_same_grid(model, a.model);
    check_same_grid(model, b.model);
    if (a.values == b.values) return monge_ampere(model, a);
    std::vector<double> mid(a.size());
    for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (a[k] + b[k]);
    auto mm = monge_ampere(model, Potential(model, mid));
    auto ma = monge_ampere(model, a);
    auto mb = monge_ampere(model, b);
    std::vector<double> cells(mid.size()), atoms(mid.size());
    for (std::size_t k = 0; k < mid.size(); ++k) {
        cells[k] = 0.5 * (4 * mm.cell_mass[k] - (ma.cell_mass[k] + mb.cell_mass[k]));
        atoms[k] = 0.5 * (4 * mm.boundary_atoms[k] - (ma.boundary_atoms[k] + mb.boundary_atoms[k]));
        if (cells[k] < -tol.tol_mass || atoms[k] < -tol.tol_mass)
            throw Error(ErrorCode::polarization_negativity, "mixed mass below tolerance");
    }
    MeasureField r;
    r.model = model;
    r.cell_mass = std::move(cells);
    r.boundary_atoms = std::move(atoms);
    r.total = 0;
    for (std::size_t k = 0; k < mid.size(); ++k) r.total += r.cell_mass[k] + r.boundary_atoms[k];
    return r;
}

const MeasureField& reference_ma(const ModelPtr& model) {
    std::call_once(model->ref_ma_once, [&] {
        model->ref_ma = std::make_shared<const MeasureField>(monge_ampere(model, Potential::reference(model)));
    });
    return *model->ref_ma;
}

Potential psh_envelope(const ModelPtr& model, const std::vector<double>& u) {
    if (u.size() != model->size()) throw Error(ErrorCode::grid_mismatch, "envelope input size");
    bool any = false;
    for (double x : u) {
        if (std::isnan(x) || x == -inf) throw Error(ErrorCode::invalid_argument, "envelope input must be finite or +inf");
        any = any || std::isfinite(x);
    }
    if (!any) throw Error(ErrorCode::all_plus_infinity, "no finite obstacle value");
    return Potential(model, model->n == 1 ? envelope_1d(*model, u) : envelope_2d(*model, u));
}

Potential extremal_function(const ModelPtr& model, const std::vector<char>& K, const std::vector<double>& v) {
    if (K.size() != model->size() || v.size() != model->size()) throw Error(ErrorCode::grid_mismatch, "K/v size");
    std::vector<double> u(model->size(), inf);
    bool any = false;
    for (std::size_t k = 0; k < u.size(); ++k)
        if (K[k]) {
            if (!std::isfinite(v[k])) throw Error(ErrorCode::invalid_argument, "v must be finite on K");
            u[k] = model->reference[k] + 2 * v[k];
            any = true;
        }
    if (!any) throw Error(ErrorCode::empty_K, "K has no nodes");
    return psh_envelope(model, u);
}

namespace {

Potential geodesic_1d(const ModelPtr& model, const Potential& p0, const Potential& p1, double t) {
    const auto& m = *model;
    std::vector<double> lo0, hi0, lo1, hi1;
    subgradients_1d(m, p0.values, lo0, hi0);
    subgradients_1d(m, p1.values, lo1, hi1);
    // walk both partitions of [0,d] simultaneously
    std::vector<double> X, Y, P;  // vertex abscissa, value, right slope
    std::size_t i = 0, j = 0, N = p0.size();
    auto skip = [&](std::size_t& k, const std::vector<double>& lo, const std::vector<double>& hi) {
        while (k < N && !(hi[k] > lo[k])) ++k;
    };
    skip(i, lo0, hi0);
    skip(j, lo1, hi1);
    while (i < N && j < N) {
        X.push_back((1 - t) * m.grid[i] + t * m.grid[j]);
        Y.push_back((1 - t) * p0[i] + t * p1[j]);
        double e = std::min(hi0[i], hi1[j]);
        P.push_back(e);
        if (hi0[i] == e) {
            ++i;
            skip(i, lo0, hi0);
        }
        if (hi1[j] == e) {
            ++j;
            skip(j, lo1, hi1);
        }
    }
    std::vector<double> res(N);
    std::size_t a = 0;
    for (std::size_t k = 0; k < N; ++k) {
        double x = m.grid[k];
        while (a + 1 < X.size() && X[a + 1] <= x) ++a;
        if (x < X[0]) res[k] = Y[0];
        else res[k] = Y[a] + P[a] * (x - X[a]);
    }
    return Potential(model, res);
}

Potential geodesic_2d(const ModelPtr& model, const Potential& p0, const Potential& p1, double t) {
    const auto& m = *model;
    auto c0 = power_cells(m, p0.values);
    auto c1 = power_cells(m, p1.values);
    const int B = 32;
    const double d = m.degree;
    auto bin = [&](double z) { return std::clamp(int(z / d * B), 0, B - 1); };
    auto cellbox = [&](const Polygon& p, int& x0, int& x1, int& y0, int& y1) {
        double ax = 1e300, bx = -1e300, ay = 1e300, by = -1e300;
        for (auto& v : p.vert) {
            ax = std::min(ax, v[0]);
            bx = std::max(bx, v[0]);
            ay = std::min(ay, v[1]);
            by = std::max(by, v[1]);
        }
        x0 = bin(ax);
        x1 = bin(bx);
        y0 = bin(ay);
        y1 = bin(by);
    };
    std::vector<std::vector<int>> bucket(B * B);
    for (std::size_t k = 0; k < c1.size(); ++k) {
        if (c1[k].vert.empty()) continue;
        int x0, x1, y0, y1;
        cellbox(c1[k], x0, x1, y0, y1);
        for (int a = x0; a <= x1; ++a)
            for (int b = y0; b <= y1; ++b) bucket[a * B + b].push_back(int(k));
    }
    // overlay vertices, binned by slope: piece value v.x + c with c = -u_t^*(v)
    struct Bin {
        std::vector<std::array<double, 3>> pieces;
        double cmax = -inf;
    };
    std::vector<Bin> bins(B * B);
    std::vector<int> seen(c1.size(), -1);
    for (std::size_t k = 0; k < c0.size(); ++k) {
        if (c0[k].vert.empty()) continue;
        int x0, x1, y0, y1;
        cellbox(c0[k], x0, x1, y0, y1);
        auto xk = m.point(k);
        for (int a = x0; a <= x1; ++a)
            for (int b = y0; b <= y1; ++b)
                for (int q : bucket[a * B + b]) {
                    if (seen[q] == int(k)) continue;
                    seen[q] = int(k);
                    // clip by the half-planes that define cell q, robust when the cell is a sliver
                    auto xq = m.point(q);
                    Polygon ov = c0[k];
                    for (int r : c1[q].tag) {
                        if (r < 0 || ov.vert.empty()) continue;
                        auto xr = m.point(r);
                        ov = clip(ov, xq[0] - xr[0], xq[1] - xr[1], p1[q] - p1[r], r);
                    }
                    for (auto& v : ov.vert) {
                        double ut = (1 - t) * (v[0] * xk[0] + v[1] * xk[1] - p0[k]) + t * (v[0] * xq[0] + v[1] * xq[1] - p1[q]);
                        auto& bn = bins[bin(v[0]) * B + bin(v[1])];
                        bn.pieces.push_back({v[0], v[1], -ut});
                        bn.cmax = std::max(bn.cmax, -ut);
                    }
                }
    }
    std::vector<int> nonempty;
    for (int q = 0; q < B * B; ++q)
        if (!bins[q].pieces.empty()) nonempty.push_back(q);
    const double w = d / B;
    std::vector<double> res(m.size());
    detail::parallel_for(m.size(), [&](std::size_t i) {
        auto x = m.point(i);
        // upper bound per bin: cmax + max over the bin box of v.x
        std::vector<std::pair<double, int>> ub;
        ub.reserve(nonempty.size());
        for (int q : nonempty) {
            double lx = (q / B) * w, ly = (q % B) * w;
            double vx = std::max(lx * x[0], (lx + w) * x[0]), vy = std::max(ly * x[1], (ly + w) * x[1]);
            ub.push_back({bins[q].cmax + vx + vy, q});
        }
        std::sort(ub.begin(), ub.end(), std::greater<>());
        double best = -inf;
        for (const auto& [bound, q] : ub) {
            if (bound <= best) break;
            for (const auto& p : bins[q].pieces) best = std::max(best, p[2] + p[0] * x[0] + p[1] * x[1]);
        }
        res[i] = best;
    });
    return Potential(model, res);
}

}  // namespace

double legendre_integral(const ModelPtr& model, const Potential& psi) {
    check_same_grid(model, psi.model);
    const auto& m = *model;
    double s = 0;
    if (m.n == 1) {
        std::vector<double> lo, hi;
        subgradients_1d(m, psi.values, lo, hi);
        for (std::size_t i = 0; i < psi.size(); ++i)
            s += m.grid[i] * 0.5 * (hi[i] - lo[i]) * (hi[i] + lo[i]) - psi[i] * (hi[i] - lo[i]);
        return s;
    }
    auto cells = power_cells(m, psi.values);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto& c = cells[k];
        std::size_t nv = c.vert.size();
        if (nv < 3) continue;
        // integral of the linear function p.x_k - psi_k over the polygon
        double A = 0, cx = 0, cy = 0;
        for (std::size_t e = 0; e < nv; ++e) {
            const auto& P = c.vert[e];
            const auto& Q = c.vert[(e + 1) % nv];
            double cr = P[0] * Q[1] - Q[0] * P[1];
            A += cr;
            cx += (P[0] + Q[0]) * cr;
            cy += (P[1] + Q[1]) * cr;
        }
        A *= 0.5;
        auto x = m.point(k);
        s += (cx * x[0] + cy * x[1]) / 6.0 - psi[k] * A;
    }
    return s;
}

Potential geodesic(const ModelPtr& model, const Potential& p0, const Potential& p1, double t) {
    check_same_grid(model, p0.model);
    check_same_grid(model, p1.model);
    if (!(t >= 0 && t <= 1)) throw Error(ErrorCode::invalid_argument, "geodesic time outside [0,1]");
    if (!is_full_mass(monge_ampere(model, p0)) || !is_full_mass(monge_ampere(model, p1)))
        throw Error(ErrorCode::non_full_mass, "geodesic endpoint lacks full mass");
    if (t == 0) return Potential(model, p0.values);
    if (t == 1) return Potential(model, p1.values);
    return model->n == 1 ? geodesic_1d(model, p0, p1, t) : geodesic_2d(model, p0, p1, t);
}

}  // namespace pluripot
