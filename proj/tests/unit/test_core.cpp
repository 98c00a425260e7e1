#include <doctest.h>

#include <cmath>

#include "mirage/common.hpp"
#include "mirage/digest.hpp"
#include "mirage/rng.hpp"

using namespace mirage;

TEST_CASE("fnv1a64 known vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(digest_of("a").size() == 16);
}

TEST_CASE("chain digest is sensitive to every part") {
  const std::string base = chain_digest("aaaa111122223333", 100, "dana");
  CHECK(base != chain_digest("aaaa111122223334", 100, "dana"));
  CHECK(base != chain_digest("aaaa111122223333", 101, "dana"));
  CHECK(base != chain_digest("aaaa111122223333", 100, "miguel"));
  CHECK(base == chain_digest("aaaa111122223333", 100, "dana"));
}

TEST_CASE("actor tags round-trip") {
  for (const Actor& actor :
       {Actor::system(), Actor::persona("dana"), Actor::attacker("lockbox_ransom")}) {
    CHECK(Actor::parse(actor.str()) == actor);
  }
  CHECK_THROWS_AS(Actor::parse("alien:byte"), Error);
}

TEST_CASE("minutes of day parsing") {
  CHECK(parse_minutes_of_day("09:30") == 570);
  CHECK(parse_minutes_of_day("00:00") == 0);
  CHECK(format_minutes_of_day(570) == "09:30");
  CHECK_THROWS_AS(parse_minutes_of_day("24:00"), Error);
  CHECK_THROWS_AS(parse_minutes_of_day("nine"), Error);
}

TEST_CASE("exp_neg tracks libm within tolerance") {
  for (double x : {0.0, 0.1, 0.5, 1.0, 2.5, 7.0, 20.0, 48.0, 59.9}) {
    CHECK(exp_neg(x) == doctest::Approx(std::exp(-x)).epsilon(1e-12));
  }
}

TEST_CASE("rng streams are deterministic and labeled streams differ") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(derive_seed(7, "x") != derive_seed(7, "y"));
  CHECK(derive_seed(7, "x") == derive_seed(7, "x"));
  CHECK(derive_seed(7, "x") != derive_seed(8, "x"));
}

TEST_CASE("poisson sampling has the right mean") {
  Rng rng(1234);
  const double mean = 48.0;
  const int n = 20000;
  std::int64_t total = 0;
  for (int i = 0; i < n; ++i) total += rng.poisson(mean);
  const double sample_mean = static_cast<double>(total) / n;
  CHECK(sample_mean == doctest::Approx(mean).epsilon(0.02));
  CHECK(Rng(1).poisson(0.0) == 0);
  CHECK(Rng(1).poisson(-3.0) == 0);
}

TEST_CASE("uniform below covers the range evenly") {
  Rng rng(99);
  std::int64_t counts[7] = {0};
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int k = 0; k < 7; ++k) {
    CHECK(counts[k] > 9000);
    CHECK(counts[k] < 11000);
  }
}
