#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ldprec/data.hpp"
#include "ldprec/error.hpp"
#include "ldprec/random.hpp"

using namespace ldprec;

TEST_CASE("movielens loader") {
  std::istringstream in("1\t10\t4\t881250949\n1\t12\t3\t881250950\n7\t10\t5\t881250951\n");
  const auto m = load_movielens(in);
  CHECK(m.size() == 3);
  CHECK(m.users() == 2);
  CHECK(m.items() == 2);
  CHECK(m.domain().lower() == 0.5);
  CHECK(m.domain().upper() == 5.0);
  CHECK(m[2] == Rating{1, 0, 5.0});

  std::istringstream empty("");
  CHECK_THROWS_AS(load_movielens(empty), DataError);

  std::ostringstream bad;
  for (int i = 1; i <= 6; ++i) bad << i << "\t1\t3\t0\n";
  bad << "7\tx\t3\t0\n";
  std::istringstream bad_in(bad.str());
  try {
    load_movielens(bad_in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
  }

  std::istringstream short_line("1\t2\t3\n");
  CHECK_THROWS_AS(load_movielens(short_line), ParseError);
  std::istringstream out_of_domain("1\t2\t6\t0\n");
  CHECK_THROWS_AS(load_movielens(out_of_domain), DomainError);
}

TEST_CASE("jester loader") {
  std::istringstream in("3,1.5,99,-9.75\n0,99,99,99\n2,99,10,-10\n");
  const auto m = load_jester(in);
  CHECK(m.users() == 3);
  CHECK(m.items() == 3);
  CHECK(m.size() == 4);
  CHECK(m.row(1).empty());
  for (const auto& e : m.entries()) CHECK(e.value != 99.0);

  std::istringstream ragged("1,2\n2,3,4\n");
  CHECK_THROWS_AS(load_jester(ragged), ParseError);
  std::istringstream wild("1,12.5\n");
  CHECK_THROWS_AS(load_jester(wild), DomainError);
}

TEST_CASE("libimseti loader") {
  std::istringstream in("5,100,10\n5,101,1\n9,100,7\n");
  const auto m = load_libimseti(in);
  CHECK(m.size() == 3);
  CHECK(m.domain().rank_count() == 10);

  std::istringstream dup("5,100,10\n5,100,3\n");
  CHECK_THROWS_AS(load_libimseti(dup), DataError);
  std::istringstream zero("5,100,0\n");
  CHECK_THROWS_AS(load_libimseti(zero), DomainError);
}

TEST_CASE("canonical format round-trips exactly") {
  Rng rng(99);
  std::uniform_real_distribution<double> value(-3.0, 7.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t users = 1 + rng() % 30, items = 1 + rng() % 30;
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    std::vector<Rating> entries;
    for (int k = 0; k < 100; ++k) {
      const auto u = static_cast<std::uint32_t>(rng() % users);
      const auto i = static_cast<std::uint32_t>(rng() % items);
      if (seen.insert({u, i}).second) entries.push_back({u, i, value(rng)});
    }
    const RatingDomain d = trial % 2 ? RatingDomain(-3.0, 7.0) : RatingDomain::with_ranks(-3.0, 7.0, 0.25);
    const SparseRatingMatrix m(users, items, entries, d);
    std::stringstream buf;
    write_canonical(m, buf);
    CHECK(read_canonical(buf) == m);
  }
  std::istringstream bad("2,2\n0,5\n0,0,1\n1,1,9\n");
  CHECK_THROWS_AS(read_canonical(bad), DomainError);
}

TEST_CASE("subsample") {
  std::vector<Rating> entries;
  for (std::uint32_t u = 0; u < 50; ++u)
    for (std::uint32_t i = 0; i < 40; ++i)
      if ((u * 7 + i * 3) % 5 != 0) entries.push_back({u, i, 0.5 + 0.5 * ((u + i) % 10)});
  const SparseRatingMatrix m(50, 40, entries, RatingDomain::with_ranks(0.5, 5.0, 0.5));

  CHECK(subsample(m, {.fraction = 1.0}, 3) == m);
  const auto a = subsample(m, {.fraction = 0.1}, 7);
  CHECK(a.size() == 160);
  CHECK(subsample(m, {.fraction = 0.1}, 7) == a);
  CHECK_FALSE(subsample(m, {.fraction = 0.1}, 8) == a);
  CHECK(subsample(m, {.max_entries = 25}, 7).size() == 25);
  // Dense reindexing: every user and item index is used.
  std::set<std::uint32_t> users, items;
  for (const auto& e : a.entries()) { users.insert(e.user); items.insert(e.item); }
  CHECK(users.size() == a.users());
  CHECK(items.size() == a.items());
  CHECK_THROWS_AS(subsample(m, {.fraction = 0.0}, 1), ConfigError);
}

TEST_CASE("rank marginal") {
  const SparseRatingMatrix m(2, 2, {{0, 0, 1.0}, {0, 1, 5.0}, {1, 0, 5.0}, {1, 1, 3.0}},
                             RatingDomain::with_ranks(0.5, 5.0, 0.5));
  const auto p = rank_marginal(m);
  REQUIRE(p.size() == 10);
  CHECK(p[1] == 0.25);
  CHECK(p[5] == 0.25);
  CHECK(p[9] == 0.5);
}

TEST_CASE("official movielens 100k file") {
  const std::filesystem::path path = LDPREC_MOVIELENS_PATH;
  if (!std::filesystem::exists(path)) {
    MESSAGE("movielens file not present at " << path.string() << "; skipping");
    return;
  }
  const auto ds = load_dataset(DatasetSpec::named("movielens", path));
  CHECK(ds.ratings.size() == 100000);
  CHECK(ds.ratings.users() == 943);
  CHECK(ds.ratings.items() == 1682);
  CHECK(ds.sha256.size() == 64);
  CHECK(ds.notes.size() == 1);
  CHECK(subsample(ds.ratings, {.fraction = 0.1}, 1).size() == 10000);
}
