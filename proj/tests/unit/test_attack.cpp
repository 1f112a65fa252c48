#include "helpers.hpp"

#include "blackbandit/attack.hpp"
#include "blackbandit/errors.hpp"
#include "blackbandit/suite.hpp"

#include <doctest.h>

#include <cmath>

using namespace bb;

namespace {

struct Fixture {
  OraclePtr oracle = make_oracle(OracleDescriptor{});
  std::vector<LabeledInput> suite = make_suite(*oracle, SuiteSpec{8, 2024, 1.5, 0.25});
};

AttackConfig linf(Method m, std::uint64_t cap = 2000) {
  AttackConfig c;
  c.method = m;
  c.norm = Norm::Linf;
  c.epsilon = 0.05;
  c.step = 0.005;
  c.max_queries = cap;
  c.bandit = BanditHyper::imagenet_linf();
  c.bandit.h_image = 0.005;
  return c;
}

}  // namespace

TEST_SUITE("attack") {
  TEST_CASE("method names") {
    CHECK(parse_method("fd") == Method::CoordinateFd);
    CHECK(to_string(Method::Bandit) == "bandit");
    CHECK_THROWS_AS(parse_method("pgd"), InvalidArgument);
  }

  TEST_CASE("queries per iteration") {
    AttackConfig c;
    c.method = Method::CoordinateFd;
    CHECK(queries_per_iteration(c, 256) == 257);
    c.fd_scheme = FiniteDifference::Central;
    CHECK(queries_per_iteration(c, 256) == 512);
    c.method = Method::Nes;
    c.nes.samples = 50;
    CHECK(queries_per_iteration(c, 256) == 50);
    c.method = Method::Bandit;
    CHECK(queries_per_iteration(c, 256) == 2);
    c.method = Method::Whitebox;
    CHECK(queries_per_iteration(c, 256) == 0);
  }

  TEST_CASE("config validation") {
    auto c = linf(Method::Nes);
    c.max_queries = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = linf(Method::Nes);
    c.epsilon = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = linf(Method::Nes);
    c.nes.samples = 3;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }

  TEST_CASE("whitebox attack succeeds without loss queries") {
    Fixture f;
    Rng rng(1);
    auto c = linf(Method::Whitebox);
    c.step = 0.01;
    const auto r = run_attack(f.oracle, f.suite[0], c, rng);
    CHECK(r.outcome.success);
    CHECK(r.outcome.queries_used == 0);
    CHECK(r.outcome.iterations == r.trace.records.size());
    CHECK(audit_attack(r, f.suite[0], c, *f.oracle).ok());
  }

  TEST_CASE("one coordinate-fd iteration spends d + 1 queries") {
    Fixture f;
    Rng rng(1);
    auto c = linf(Method::CoordinateFd, 300);
    const auto r = run_attack(f.oracle, f.suite[0], c, rng);
    CHECK(r.outcome.iterations == 1);
    CHECK(r.outcome.queries_used == 257);
  }

  TEST_CASE("budget is respected and queries grow per iteration") {
    Fixture f;
    for (auto m : {Method::Nes, Method::Bandit, Method::CoordinateFd}) {
      auto c = linf(m, 600);
      c.priors.data = true;
      for (const auto& in : f.suite) {
        Rng rng(derive_seed(3, static_cast<std::uint64_t>(in.label)));
        const auto r = run_attack(f.oracle, in, c, rng);
        CHECK(r.outcome.queries_used <= 600);
        const auto report = audit_attack(r, in, c, *f.oracle);
        CHECK_MESSAGE(report.ok(), to_string(m));
        const auto per = queries_per_iteration(c, 256);
        for (const auto& rec : r.trace.records) CHECK(rec.queries == rec.iteration * per);
        if (!r.outcome.success) CHECK(r.outcome.queries_used + per > 600);
      }
    }
  }

  TEST_CASE("runs are deterministic for a seed") {
    Fixture f;
    for (auto m : {Method::Nes, Method::Bandit}) {
      Rng a(77), b(77);
      const auto c = linf(m);
      const auto ra = run_attack(f.oracle, f.suite[1], c, a);
      const auto rb = run_attack(f.oracle, f.suite[1], c, b);
      CHECK(ra.outcome.queries_used == rb.outcome.queries_used);
      CHECK(ra.outcome.success == rb.outcome.success);
      CHECK(ra.outcome.adversarial_point.data == rb.outcome.adversarial_point.data);
    }
  }

  TEST_CASE("trace records loss and cosine") {
    Fixture f;
    Rng rng(2);
    const auto r = run_attack(f.oracle, f.suite[2], linf(Method::Nes), rng);
    REQUIRE_FALSE(r.trace.records.empty());
    for (const auto& rec : r.trace.records) {
      CHECK(std::isfinite(rec.loss));
      CHECK(rec.cosine >= -1.0);
      CHECK(rec.cosine <= 1.0);
      CHECK(rec.distance <= 0.05 * (1 + 1e-9));
    }
  }

  TEST_CASE("whitebox loss rises monotonically on a softmax model") {
    OracleDescriptor d;
    d.kind = OracleKind::Softmax;
    d.dimension = 20;
    d.num_classes = 5;
    d.seed = 3;
    d.shape.reset();
    const auto o = make_oracle(d);
    Vector x(20);
    for (int i = 0; i < 20; ++i) x[i] = i / 19.0;
    const LabeledInput in{Point(x), o->top_classes(std::span<const Vector>(&x, 1)).front()};
    AttackConfig c;
    c.method = Method::Whitebox;
    c.norm = Norm::L2;
    c.epsilon = 100.0;
    c.step = 0.01;
    c.clamp = false;
    c.max_iterations = 50;
    Rng rng(0);
    const auto r = run_attack(o, in, c, rng);
    double prev = o->losses(std::span<const Vector>(&x, 1), in.label).front();
    for (const auto& rec : r.trace.records) {
      CHECK(rec.loss >= prev);
      prev = rec.loss;
    }
  }

  TEST_CASE("invalid inputs") {
    Fixture f;
    Rng rng(0);
    auto wrong = f.suite[0];
    wrong.label = (wrong.label + 1) % 10;
    CHECK_THROWS_AS(run_attack(f.oracle, wrong, linf(Method::Nes), rng), InvalidArgument);
    CHECK_THROWS_AS(run_attack(bbtest::linear({1, 2}), bbtest::input(bbtest::vec({0, 0})), linf(Method::Nes), rng),
                    InvalidArgument);
    LabeledInput short_in{Point(Vector::Zero(10)), 0};
    CHECK_THROWS_AS(run_attack(f.oracle, short_in, linf(Method::Nes), rng), DimensionMismatch);
  }

  TEST_CASE("audit flags a tampered trace") {
    Fixture f;
    Rng rng(1);
    const auto c = linf(Method::Nes);
    auto r = run_attack(f.oracle, f.suite[0], c, rng);
    REQUIRE_FALSE(r.trace.records.empty());
    r.trace.records.front().distance = 0.2;
    r.outcome.queries_used = 5000;
    const auto report = audit_attack(r, f.suite[0], c, *f.oracle);
    CHECK(report.violations.size() >= 2);
  }
}
