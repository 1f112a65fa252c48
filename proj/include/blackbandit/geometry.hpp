#pragma once

#include "blackbandit/types.hpp"

namespace bb {

/// Unit-norm vector with the largest inner product with g: g/||g||_2 under
/// L2, sign(g) under Linf with sign(0) = +1. Throws InvalidArgument for a
/// zero vector under L2.
Vector boundary_project(const Vector& g, Norm norm);

/// Projects x onto the epsilon-ball around x0, then (if clamp) onto [0,1].
Vector ball_project(const Vector& x, const Vector& x0, double epsilon, Norm norm, bool clamp);

/// Single signed step x0 + epsilon * sign_vector, clamped to [0,1].
Vector fgsm_step(const Vector& x0, const Vector& sign_vector, double epsilon);

/// ||x - x0|| in the given norm.
double perturbation_norm(const Vector& x, const Vector& x0, Norm norm);

}  // namespace bb
