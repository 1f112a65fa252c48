#include "helpers.hpp"

#include "blackbandit/errors.hpp"
#include "blackbandit/geometry.hpp"

#include <doctest.h>

using namespace bb;
using bbtest::vec;

TEST_SUITE("geometry") {
  TEST_CASE("boundary projection") {
    CHECK((boundary_project(vec({3, 4}), Norm::L2) - vec({0.6, 0.8})).norm() < 1e-15);
    CHECK(boundary_project(vec({0.2, -7, 0}), Norm::Linf) == vec({1, -1, 1}));
    const Vector g = vec({-0.1, 5, 0, 2});
    const Vector s = boundary_project(g, Norm::Linf);
    CHECK(boundary_project(s, Norm::Linf) == s);
    CHECK_THROWS_AS(boundary_project(vec({0, 0}), Norm::L2), InvalidArgument);
    CHECK(boundary_project(vec({0, 0}), Norm::Linf) == vec({1, 1}));
  }

  TEST_CASE("ball projection") {
    CHECK(ball_project(vec({0.58}), vec({0.5}), 0.05, Norm::Linf, true)[0] == doctest::Approx(0.55));
    CHECK((ball_project(vec({3, 4}), vec({0, 0}), 1.0, Norm::L2, false) - vec({0.6, 0.8})).norm() < 1e-15);
    const Vector inside = vec({0.51, 0.49});
    CHECK(ball_project(inside, vec({0.5, 0.5}), 0.05, Norm::Linf, true) == inside);
    CHECK(ball_project(inside, vec({0.5, 0.5}), 1.0, Norm::L2, true) == inside);
  }

  TEST_CASE("ball projection clamps after the norm ball") {
    // Offset (0.3, 0.4) is rescaled to (0.06, 0.08), then clamped to [0,1].
    const Vector x = ball_project(vec({1.25, 1.4}), vec({0.95, 1.0}), 0.1, Norm::L2, true);
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));
    const Vector y = ball_project(vec({1.25, -0.4}), vec({0.99, 0.02}), 0.05, Norm::Linf, true);
    CHECK(y == vec({1.0, 0.0}));
    const Vector z = ball_project(vec({1.25, -0.4}), vec({0.99, 0.02}), 0.05, Norm::Linf, false);
    CHECK((z - vec({1.04, -0.03})).norm() < 1e-15);
  }

  TEST_CASE("fgsm step") {
    const Vector x0 = vec({0.2, 0.5, 0.98});
    CHECK(fgsm_step(x0, vec({1, -1, 1}), 0.0) == x0);
    CHECK((fgsm_step(x0, vec({1, -1, 1}), 0.05) - vec({0.25, 0.45, 1.0})).norm() < 1e-15);
    // Linear oracle: loss rises by eps * |c|_1 before clamping.
    const Vector c = vec({0.3, -2, 1});
    const Vector mid = vec({0.5, 0.5, 0.5});
    const Vector adv = fgsm_step(mid, boundary_project(c, Norm::Linf), 0.05);
    CHECK(c.dot(adv) - c.dot(mid) == doctest::Approx(0.05 * c.lpNorm<1>()));
  }

  TEST_CASE("perturbation norm") {
    CHECK(perturbation_norm(vec({3, 4}), vec({0, 0}), Norm::L2) == doctest::Approx(5.0));
    CHECK(perturbation_norm(vec({3, -4}), vec({0, 0}), Norm::Linf) == doctest::Approx(4.0));
  }
}
