#include "blackbandit/csv.hpp"
#include "blackbandit/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace bb;

TEST_SUITE("csv") {
  TEST_CASE("doubles round-trip") {
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(csv::format_double(std::nan("")).empty());
    CHECK(csv::format_double(-0.0) == "0");
    const double v = 0.1 + 0.2;
    CHECK(std::stod(csv::format_double(v)) == v);
  }

  TEST_CASE("writer quotes and counts columns") {
    std::ostringstream s;
    csv::Writer w(s, {"a", "b"});
    w.field(std::string_view("x,y")).field(std::uint64_t{3}).end_row();
    w.field(true).field(std::string_view("say \"hi\"")).end_row();
    CHECK(s.str() == "a,b\n\"x,y\",3\n1,\"say \"\"hi\"\"\"\n");
    w.field(1);
    CHECK_THROWS(w.end_row());
  }

  TEST_CASE("equivalence rows") {
    EquivalenceRow r;
    r.k = 50;
    r.d = 1000;
    r.p = 0.05;
    r.trials = 200;
    r.gap_q99 = 0.25;
    r.bound = 64.5;
    std::ostringstream s;
    csv::write_equivalence(s, std::span<const EquivalenceRow>(&r, 1));
    CHECK(s.str() == "k,d,p,trials,gap_q99,bound\n50,1000,0.05,200,0.25,64.5\n");
  }
}
