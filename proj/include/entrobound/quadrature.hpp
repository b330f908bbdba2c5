#pragma once

#include <functional>
#include <span>
#include <vector>

#include "entrobound/geometry.hpp"

namespace entrobound {

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence and cached per order.
const std::vector<double>& gauss_legendre_nodes(int order);
const std::vector<double>& gauss_legendre_weights(int order);

/// Tensor-product Gauss-Legendre integral of f over a box.
double integrate_box(const Box& box, int order,
                     const std::function<double(std::span<const double>)>& f);

/// Same integral with an embedded error estimate: the value at `order`
/// and the absolute difference against order/2. Throws NumericalError
/// (reporting the achieved estimate) if the estimate exceeds tol after
/// one dyadic refinement of the box.
double integrate_box_checked(const Box& box, int order, double tol,
                             const std::function<double(std::span<const double>)>& f);

}  // namespace entrobound
