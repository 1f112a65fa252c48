#include "helpers.hpp"

#include "blackbandit/errors.hpp"
#include "blackbandit/experiments.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace bb;
using bbtest::vec;

namespace {

struct Fixture {
  OraclePtr oracle = make_oracle(OracleDescriptor{});
  std::vector<LabeledInput> suite = make_suite(*oracle, SuiteSpec{24, 2024, 1.5, 0.25});
};

RunRecord run(const std::string& m, std::size_t id, bool ok, std::uint64_t q) {
  RunRecord r;
  r.method = m;
  r.input_id = id;
  r.success = ok;
  r.queries = q;
  return r;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("mean and stderr") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto m = mean_stderr(v);
    CHECK(m.mean == 2.5);
    CHECK(m.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(m.count == 4);
    const std::vector<double> one{7};
    CHECK(mean_stderr(one).stderr_ == 0.0);
  }

  TEST_CASE("top-k mass") {
    CHECK(top_k_mass(vec({1, 2, 3}), 3) == 1.0);
    CHECK(top_k_mass(vec({1, 2, 3}), 10) == 1.0);
    CHECK(top_k_mass(vec({0, 0, -4, 0}), 1) == 1.0);
    CHECK(top_k_mass(vec({3, 4}), 1) == doctest::Approx(16.0 / 25.0));
    CHECK_THROWS_AS(top_k_mass(Vector::Zero(4), 1), InvalidArgument);
    Rng rng(1);
    double total = 0;
    for (int i = 0; i < 200; ++i) total += top_k_mass(rng.gaussian(256), 128);
    CHECK(total / 200 == doctest::Approx(0.9279).epsilon(0.02));
  }

  TEST_CASE("tile 1 reproduces the field") {
    Rng rng(4);
    const ImageShape s{16, 16, 1};
    for (int i = 0; i < 5; ++i) CHECK(std::abs(tiling_cosine(rng.gaussian(256), s, 1) - 1.0) < 1e-12);
    const auto fields = smooth_noise_fields(s, 20, 9, 1.5);
    const std::vector<std::size_t> tiles{1, 2, 4, 8};
    const auto rows = tiling_cosine_fields(fields, s, tiles);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].mean_cosine == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].mean_cosine <= rows[i - 1].mean_cosine + 1e-3);
  }

  TEST_CASE("sign fraction at rho = 1 is the FGSM rate") {
    Fixture f;
    const std::vector<double> fr{0.0, 0.5, 1.0};
    const double fgsm = fgsm_rate(*f.oracle, f.suite, 0.05);
    for (auto sel : {SignSelection::TopK, SignSelection::RandomK}) {
      const auto rows = sign_fraction_experiment(*f.oracle, f.suite, 0.05, fr, sel, 5, 2, 2);
      REQUIRE(rows.size() == 3);
      CHECK(rows[2].adversarial_rate == doctest::Approx(fgsm).epsilon(1e-12));
      CHECK(rows[0].fraction == 0.0);
    }
    CHECK(parse_sign_selection("top-k") == SignSelection::TopK);
    CHECK(to_string(SignSelection::RandomK) == "random_k");
    CHECK_THROWS_AS(parse_sign_selection("best"), InvalidArgument);
  }

  TEST_CASE("sign fraction is independent of the worker count") {
    Fixture f;
    const std::vector<double> fr{0.3, 0.6};
    const auto a = sign_fraction_experiment(*f.oracle, f.suite, 0.05, fr, SignSelection::RandomK, 5, 1, 1);
    const auto b = sign_fraction_experiment(*f.oracle, f.suite, 0.05, fr, SignSelection::RandomK, 5, 1, 4);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].adversarial_rate == b[i].adversarial_rate);
  }

  TEST_CASE("successive cosine with a zero step is one") {
    Fixture f;
    AttackConfig c;
    c.method = Method::Nes;
    c.nes.samples = 10;
    const std::vector<double> sizes{0.0};
    const std::vector<LabeledInput> few(f.suite.begin(), f.suite.begin() + 4);
    const auto r = successive_cosine_experiment(f.oracle, few, c, sizes, 3, 1, 2);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) CHECK(row.mean_cosine == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.rows[0].step_index == 1);
    CHECK(r.baseline.count == 2);
  }

  TEST_CASE("sparsity experiment") {
    Fixture f;
    const std::vector<std::size_t> ks{1, 16, 256};
    const auto r = sparsity_mass_experiment(*f.oracle, f.suite, ks);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[2].mean_mass_fraction == doctest::Approx(1.0));
    CHECK(r.rows[0].mean_mass_fraction < r.rows[1].mean_mass_fraction);
  }

  TEST_CASE("equivalence experiment stays under the bound") {
    const auto row = equivalence_experiment(20, 400, 0.05, 40, 1, 2);
    CHECK(row.trials == 40);
    CHECK(row.gap_q99 >= 0.0);
    CHECK(row.gap_q99 < row.bound);
    CHECK(row.exceed_fraction == 0.0);
    const auto again = equivalence_experiment(20, 400, 0.05, 40, 1, 1);
    CHECK(again.gap_q99 == row.gap_q99);
  }

  TEST_CASE("summary arithmetic") {
    std::vector<RunRecord> runs{run("m", 0, true, 100), run("m", 1, false, 1000), run("m", 2, true, 300),
                                run("m", 3, true, 100)};
    const std::vector<std::size_t> base{0, 1};
    const auto s = summarize_method("m", runs, 1000, base);
    CHECK(s.runs == 4);
    CHECK(s.successes == 3);
    CHECK(s.success_rate == 0.75);
    CHECK(s.failure_rate == 0.25);
    CHECK(s.avg_queries_success == doctest::Approx(500.0 / 3.0));
    CHECK(s.baseline_intersection == 1);
    CHECK(s.avg_queries_on_baseline_success == 100.0);
    // Sorted 100, 100, 300, 1000.
    CHECK(s.median_queries == 200.0);
    REQUIRE(s.query_cdf.size() == 2);
    CHECK(s.query_cdf[0] == std::pair<std::uint64_t, double>{100, 0.5});
    CHECK(s.query_cdf[1] == std::pair<std::uint64_t, double>{300, 0.75});
    REQUIRE(s.avg_queries_by_success.size() == 3);
    CHECK(s.avg_queries_by_success[2].first == 0.75);
    CHECK(s.avg_queries_by_success[2].second == doctest::Approx(500.0 / 3.0));
  }

  TEST_CASE("curves carry the last value forward") {
    auto a = run("m", 0, true, 2);
    a.trace.records = {{1, 1, 1.0, 0.5}, {2, 2, 3.0, 0.7}};
    auto b = run("m", 1, true, 1);
    b.trace.records = {{1, 1, 5.0, std::nan("")}};
    const std::vector<RunRecord> runs{a, b};
    const auto s = summarize_method("m", runs, 10, {});
    REQUIRE(s.mean_loss_by_iteration.size() == 2);
    CHECK(s.mean_loss_by_iteration[0] == 3.0);
    CHECK(s.mean_loss_by_iteration[1] == 4.0);
    CHECK(s.mean_cosine_by_iteration[0] == 0.5);
  }

  TEST_CASE("whitebox never fails on a feasible suite") {
    Fixture f;
    BenchmarkSpec spec;
    spec.oracle = f.oracle;
    spec.suite = f.suite;
    AttackConfig wb;
    wb.method = Method::Whitebox;
    wb.norm = Norm::Linf;
    wb.epsilon = 0.3;
    wb.step = 0.01;
    spec.methods = {{"whitebox", wb}};
    spec.baseline = "whitebox";
    const auto report = attack_benchmark(spec);
    CHECK(report.method("whitebox").failure_rate == 0.0);
    CHECK(report.method("whitebox").avg_queries_success == 0.0);
  }

  TEST_CASE("dominance: whitebox >= nes >= coordinate fd at equal budgets") {
    const auto oracle = make_oracle(OracleDescriptor{});
    BenchmarkSpec spec;
    spec.oracle = oracle;
    spec.suite = make_suite(*oracle, SuiteSpec{});
    AttackConfig base;
    base.norm = Norm::Linf;
    base.epsilon = 0.05;
    base.step = 0.005;
    base.max_queries = 2000;
    base.nes.samples = 50;
    auto wb = base, nes = base, fd = base;
    wb.method = Method::Whitebox;
    nes.method = Method::Nes;
    fd.method = Method::CoordinateFd;
    spec.methods = {{"nes", nes}, {"whitebox", wb}, {"fd", fd}};
    const auto r = attack_benchmark(spec);
    CHECK(r.method("whitebox").successes >= r.method("nes").successes);
    CHECK(r.method("nes").successes >= r.method("fd").successes);
  }

  TEST_CASE("benchmark cross-checks against its raw rows") {
    Fixture f;
    BenchmarkSpec spec;
    spec.oracle = f.oracle;
    spec.suite.assign(f.suite.begin(), f.suite.begin() + 10);
    spec.workers = 3;
    spec.seed = 11;
    AttackConfig base;
    base.norm = Norm::Linf;
    base.epsilon = 0.05;
    base.step = 0.005;
    base.max_queries = 800;
    base.nes.samples = 50;
    auto wb = base;
    wb.method = Method::Whitebox;
    auto nes = base;
    nes.method = Method::Nes;
    auto bandit = base;
    bandit.method = Method::Bandit;
    bandit.bandit = BanditHyper::imagenet_linf();
    bandit.bandit.h_image = 0.005;
    spec.methods = {{"nes", nes}, {"whitebox", wb}, {"bandit_t", bandit}};
    const auto report = attack_benchmark(spec);
    CHECK(report.runs.size() == 30);
    for (const auto& m : report.methods) {
      std::vector<RunRecord> mine;
      for (const auto& r : report.runs)
        if (r.method == m.name) mine.push_back(r);
      const auto again = summarize_method(m.name, mine, 800, report.baseline_success_inputs);
      CHECK(std::abs(again.avg_queries_success - m.avg_queries_success) < 1e-9);
      CHECK(std::abs(again.median_queries - m.median_queries) < 1e-9);
      for (std::size_t i = 1; i < m.query_cdf.size(); ++i) CHECK(m.query_cdf[i].second >= m.query_cdf[i - 1].second);
      if (!m.query_cdf.empty()) CHECK(m.query_cdf.back().second <= m.success_rate + 1e-12);
    }
    CHECK_THROWS(report.method("nope"));
    const auto again = attack_benchmark(spec);
    for (std::size_t i = 0; i < report.runs.size(); ++i) CHECK(report.runs[i].queries == again.runs[i].queries);
  }
}
