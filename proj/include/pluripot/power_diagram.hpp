#pragma once

#include <array>
#include <vector>

#include "pluripot/core.hpp"

namespace pluripot {

using Vec2 = std::array<double, 2>;

// Convex polygon; tag[k] labels the edge vert[k] -> vert[k+1]: the node index whose
// half-plane produced it, or -1 for a polytope side.
struct Polygon {
    std::vector<Vec2> vert;
    std::vector<int> tag;
    double area() const;
};

// Subgradient cells of the lower hull of (x_j, u_j), clipped to the polytope:
// cell_i = {p in P : p.(x_i - x_j) >= u_i - u_j for all active j}.
std::vector<Polygon> power_cells(const ToricModel& m, const std::vector<double>& u,
                                 const std::vector<char>* active = nullptr);

Polygon clip(const Polygon& poly, double a0, double a1, double b, int tag);
Polygon intersect(const Polygon& a, const Polygon& b);
Polygon polytope_polygon(int degree);

// Sparse pattern of dMA_i/du_j (potential units): off-diagonal entries |edge_ij| / (|x_i-x_j| |P|).
struct Adjacency {
    std::vector<int> i, j;
    std::vector<double> w;
};
Adjacency cell_adjacency(const ToricModel& m, const std::vector<Polygon>& cells);

}  // namespace pluripot
