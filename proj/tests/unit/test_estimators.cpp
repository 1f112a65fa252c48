#include "helpers.hpp"

#include "blackbandit/errors.hpp"
#include "blackbandit/estimators.hpp"

#include <doctest.h>

#include <cmath>

using namespace bb;
using bbtest::input;
using bbtest::vec;

namespace {

ProbeMatrix splitmix_fixture() {
  // A (20 x 200) with rows z/sqrt(200), then g (200) with z, from one SplitMix64 stream seeded 11.
  SplitMix64Stream s(11);
  ProbeMatrix p;
  p.rows.resize(20, 200);
  for (Eigen::Index r = 0; r < 20; ++r) {
    for (Eigen::Index c = 0; c < 200; ++c) p.rows(r, c) = s.normal() / std::sqrt(200.0);
  }
  return p;
}

Vector splitmix_fixture_g() {
  SplitMix64Stream s(11);
  for (int i = 0; i < 20 * 200; ++i) s.normal();
  Vector g(200);
  for (Eigen::Index i = 0; i < 200; ++i) g[i] = s.normal();
  return g;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("fd_directional examples") {
    OracleHandle lin(bbtest::linear({1, 2}));
    CHECK(fd_directional(lin, input(vec({0, 0})), vec({1, 0}), 0.1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lin.queries() == 2);
    CHECK(fd_directional(lin, input(vec({0, 0})), vec({0, 0}), 0.1) == 0.0);
    CHECK(fd_directional(lin, input(vec({0, 0})), vec({0, 1}), 0.1, 0.0) == doctest::Approx(2.0));
    CHECK(lin.queries() == 5);

    OracleHandle quad(std::make_shared<QuadraticOracle>(Vector::Zero(2)));
    CHECK(fd_directional(quad, input(vec({1, 0})), vec({1, 0}), 0.01) == doctest::Approx(1.005).epsilon(1e-10));
    CHECK_THROWS_AS(fd_directional(quad, input(vec({1, 0})), vec({1, 0}), 0.0), InvalidArgument);
    CHECK_THROWS_AS(fd_directional(quad, input(vec({1, 0})), vec({1, 0}), -1.0), InvalidArgument);
  }

  TEST_CASE("fd_full_gradient recovers linear coefficients with d+1 queries") {
    OracleHandle lin(bbtest::linear({0.5, -1.5, 3.0}));
    const auto est = fd_full_gradient(lin, input(vec({0.2, 0.1, -4})), 0.25);
    CHECK((est.raw - vec({0.5, -1.5, 3.0})).norm() < 1e-12);
    CHECK(est.queries_spent == 4);
    CHECK(lin.queries() == 4);
    CHECK(est.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("fd_full_gradient on a quadratic") {
    OracleHandle quad(std::make_shared<QuadraticOracle>(Vector::Zero(2)));
    const auto est = fd_full_gradient(quad, input(vec({1, -2})), 1e-6);
    CHECK((est.raw - vec({1, -2})).cwiseAbs().maxCoeff() < 1e-5);
    OracleHandle q2(std::make_shared<QuadraticOracle>(Vector::Zero(2)));
    const auto central = fd_full_gradient(q2, input(vec({1, -2})), 1e-3, FiniteDifference::Central);
    CHECK((central.raw - vec({1, -2})).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(central.queries_spent == 4);
  }

  TEST_CASE("fd_full_gradient respects the budget") {
    OracleHandle lin(bbtest::linear({1, 2, 3}), 3);
    CHECK_THROWS_AS(fd_full_gradient(lin, input(vec({0, 0, 0})), 0.1), BudgetExhausted);
    CHECK(lin.queries() == 0);
  }

  TEST_CASE("nes query cost and antithetic pairing") {
    CHECK(nes_query_cost({10, 0.01, true}) == 10);
    CHECK(nes_query_cost({10, 0.01, false}) == 11);
    OracleHandle lin(bbtest::linear({1, 2, 3, 4}));
    Rng rng(1);
    const auto [est, probe] = nes_estimate(lin, input(Vector::Zero(4)), {6, 0.01, true}, rng);
    CHECK(lin.queries() == 6);
    CHECK(probe.queries() == 6);
    for (Eigen::Index i = 0; i < 6; i += 2) {
      CHECK(probe.rows.row(i) == -probe.rows.row(i + 1));
      CHECK(probe.responses[i] == doctest::Approx(-probe.responses[i + 1]));
    }
    CHECK((est.raw - nes_closed_form(probe)).norm() < 1e-12);
    Rng rng2(1);
    CHECK_THROWS_AS(nes_estimate(lin, input(Vector::Zero(4)), {5, 0.01, true}, rng2), InvalidArgument);
  }

  TEST_CASE("nes responses are exact inner products on a linear oracle") {
    const Vector c = vec({1, -2, 0.5});
    OracleHandle lin(std::make_shared<LinearOracle>(c));
    Rng rng(7);
    const auto [est, probe] = nes_estimate(lin, input(vec({0.3, 0.3, 0.3})), {4, 0.1, false}, rng);
    CHECK(lin.queries() == 5);
    CHECK((probe.responses - probe.rows * c).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((est.raw - probe.rows.transpose() * (probe.rows * c)).norm() < 1e-12);
  }

  TEST_CASE("nes in one dimension points along the gradient") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      OracleHandle lin(bbtest::linear({1}));
      Rng rng(seed);
      const auto [est, probe] = nes_estimate(lin, input(vec({0})), {1, 0.01, false}, rng);
      CHECK(est.direction[0] == doctest::Approx(1.0));
    }
  }

  TEST_CASE("nes on a constant oracle is exactly zero") {
    OracleHandle c(std::make_shared<bbtest::ConstantOracle>(5, 1.25));
    Rng rng(3);
    const auto [est, probe] = nes_estimate(c, input(Vector::Zero(5)), {10, 0.01, true}, rng);
    CHECK(est.raw == Vector::Zero(5));
    CHECK(est.direction == Vector::Zero(5));
  }

  TEST_CASE("nes respects the budget before querying") {
    OracleHandle lin(bbtest::linear({1, 2}), 5);
    Rng rng(1);
    CHECK_THROWS_AS(nes_estimate(lin, input(vec({0, 0})), {6, 0.01, true}, rng), BudgetExhausted);
    CHECK(lin.queries() == 0);
  }

  TEST_CASE("fixed probe matrix closed forms") {
    ProbeMatrix p;
    p.rows.resize(2, 3);
    p.rows << 1, 0, 2, 0, 1, -1;
    p.responses = vec({3, -1});
    CHECK(nes_closed_form(p) == vec({3, -1, 7}));
    const Vector lsq = lsq_estimate(p).raw;
    CHECK((lsq - vec({0.6666666666666661, 0.16666666666666646, 1.1666666666666656})).norm() < 1e-12);
    // NES with linear oracle c = e1 and the same A: raw == A^T (A c).
    p.responses = p.rows * vec({1, 0, 0});
    CHECK((nes_closed_form(p) - p.rows.transpose() * (p.rows * vec({1, 0, 0}))).norm() < 1e-12);
  }

  TEST_CASE("nes closed form is linear in y") {
    Rng rng(5);
    ProbeMatrix a{Matrix::Random(4, 7), rng.gaussian(4)};
    ProbeMatrix b{a.rows, rng.gaussian(4)};
    ProbeMatrix sum{a.rows, 2.0 * a.responses - 3.0 * b.responses};
    CHECK((nes_closed_form(sum) - (2.0 * nes_closed_form(a) - 3.0 * nes_closed_form(b))).norm() < 1e-12);
  }

  TEST_CASE("lsq small examples") {
    ProbeMatrix id{Matrix::Identity(2, 2), vec({3, 4})};
    CHECK((lsq_estimate(id).raw - vec({3, 4})).norm() < 1e-15);
    ProbeMatrix one;
    one.rows.resize(1, 2);
    one.rows << 1, 0;
    one.responses = vec({5});
    CHECK((lsq_estimate(one).raw - vec({5, 0})).norm() < 1e-15);
    CHECK(lsq_estimate(one).queries_spent == 0);
  }

  TEST_CASE("lsq seeded fixture") {
    ProbeMatrix p = splitmix_fixture();
    const Vector g = splitmix_fixture_g();
    p.responses = p.rows * g;
    const Vector x = lsq_estimate(p).raw;
    CHECK(x.dot(g) == doctest::Approx(10.81911341167651).epsilon(1e-10));
    CHECK(x.norm() == doctest::Approx(3.2892420725262097).epsilon(1e-10));
    CHECK(x[0] == doctest::Approx(0.3210487316092397).epsilon(1e-9));
    CHECK(x[1] == doctest::Approx(-0.0638593259259373).epsilon(1e-9));
    CHECK(x[2] == doctest::Approx(-0.32215659791679074).epsilon(1e-9));
    CHECK(equivalence_gap(g, p) == doctest::Approx(-0.6965255103772918).epsilon(1e-9));
  }

  TEST_CASE("lsq rejects singular systems") {
    ProbeMatrix p;
    p.rows.resize(2, 3);
    p.rows << 1, 2, 3, 2, 4, 6;
    p.responses = vec({1, 2});
    CHECK_THROWS_AS(lsq_estimate(p), NumericalError);
    try {
      lsq_estimate(p);
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("condition") != std::string::npos);
    }
  }

  TEST_CASE("equivalence gap examples") {
    // Orthonormal rows: the two estimators coincide.
    ProbeMatrix p{Matrix::Identity(3, 3), vec({0.3, -0.2, 0.9})};
    CHECK(std::abs(equivalence_gap(vec({0.3, -0.2, 0.9}), p)) < 1e-10);

    // k = 1: gap = <a,g>^2 (1/|a|^2 - 1).
    ProbeMatrix one;
    one.rows = (vec({1, 2, 2}) / 3.0 * 0.5).transpose();
    const Vector g = vec({1, 0, 0});
    one.responses = one.rows * g;
    const double ag = one.rows.row(0).dot(g);
    const double expected = ag * ag * (1.0 / one.rows.row(0).squaredNorm() - 1.0);
    CHECK(equivalence_gap(g, one) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(equivalence_gap(g, one) == doctest::Approx(0.0833333333333334).epsilon(1e-12));
  }

  TEST_CASE("equivalence bound values") {
    CHECK(equivalence_bound({50, 1000, 0.01}) == doctest::Approx(87.20732052408816).epsilon(1e-12));
    CHECK(equivalence_bound({50, 1000, 0.05}) == doctest::Approx(64.65181761400879).epsilon(1e-12));
    CHECK(equivalence_bound({1, 1, 0.5}) == doctest::Approx(131.76810261331224).epsilon(1e-12));
    CHECK(equivalence_bound({50, 10000, 0.01}) < equivalence_bound({50, 1000, 0.01}));
    CHECK_THROWS_AS(equivalence_bound({50, 1000, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(equivalence_bound({50, 1000, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(equivalence_bound({0, 1000, 0.5}), InvalidArgument);
  }

  TEST_CASE("bound at d = 300000, k = 100 stays above 5/4") {
    // Reference values of the formula; none of them reaches 1.25.
    CHECK(equivalence_bound({100, 300000, 0.5}) == doctest::Approx(3.072974965937176).epsilon(1e-12));
    CHECK(equivalence_bound({100, 300000, 0.05}) == doctest::Approx(5.007674093252311).epsilon(1e-12));
    CHECK(equivalence_bound({100, 300000, 0.999999}) == doctest::Approx(2.555278669609192).epsilon(1e-10));
    CHECK(equivalence_bound({100, 300000, 0.999999}) > 1.25);
  }

  TEST_CASE("nes mean cosine is close to sqrt(k/d)") {
    // Monte-Carlo reference: 0.2173 over 200 draws (sqrt(50/1000) = 0.2236).
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      Rng rng(seed);
      Vector g = rng.gaussian(1000);
      OracleHandle lin(std::make_shared<LinearOracle>(g));
      const auto [est, probe] = nes_estimate(lin, input(Vector::Zero(1000)), {50, 0.01, false}, rng);
      sum += est.direction.dot(g.normalized());
    }
    CHECK(std::abs(sum / 200.0 - 0.22) <= 0.05);
  }
}
