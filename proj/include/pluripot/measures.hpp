#pragma once

#include <functional>
#include <random>

#include "pluripot/core.hpp"

namespace pluripot {

// Node masses m_i = integral of rho against the hat function of node i; tails beyond the
// window go to the end nodes unless `truncate`, in which case the result is renormalized.
MeasureField hat_measure(const ModelPtr& model, const std::function<double(double)>& rho, bool truncate);

// Round volume e^t/(1+e^t)^2 dt sampled pointwise (trapezoid) with exact tail atoms.
MeasureField fs_volume_sampled(const ModelPtr& model);

MeasureField gaussian_measure(const ModelPtr& model, double mean, double sd);
MeasureField bump_measure(const ModelPtr& model, double center, double width);
// Radial C^inf bump in (x, y), sampled at the nodes.
MeasureField bump_measure_2d(const ModelPtr& model, double cx, double cy, double width);
MeasureField mixture(const std::vector<std::pair<double, MeasureField>>& parts);
MeasureField point_mass(const ModelPtr& model, std::size_t node);

// Convex potential with full mass: sums of w_k/s_k log(1+e^{s_k(t-c_k)}) for n=1,
// w_k log(a_k + b_k e^x + c_k e^y) for n=2, with sum w_k = degree.
Potential random_potential(const ModelPtr& model, std::mt19937_64& rng, int terms = 3);

std::vector<double> weight(const Potential& p);  // (psi - reference)/2

}  // namespace pluripot
