#include <cmath>

#include "doctest.h"
#include "rvts/config.hpp"
#include "rvts/error.hpp"

using namespace rvts;
using config::Document;

TEST_SUITE("config") {

TEST_CASE("sections, inline tables and arrays") {
  const auto d = Document::parse(R"(# experiment
[space]
kind = "euclidean"
dim = 2

model = { kind = "ar1_positive", phi = 0.5, alpha = 2 }

[run]
n = 1e5
tasks = ["simulate", "hill"]   # trailing comment
flag = true
bare = quantile
)");
  CHECK(d.string("space.kind") == "euclidean");
  CHECK(d.integer("space.dim") == 2);
  CHECK(d.string("space.model.kind") == "ar1_positive");
  CHECK(d.number("space.model.phi") == 0.5);
  CHECK(d.integer("run.n") == 100000);
  CHECK(d.strings("run.tasks") == std::vector<std::string>{"simulate", "hill"});
  CHECK(d.boolean_or("run.flag", false));
  CHECK(d.string("run.bare") == "quantile");
  CHECK(d.has_section("run"));
  CHECK_FALSE(d.has_section("ru"));
  CHECK(d.section("space").string("kind") == "euclidean");
}

TEST_CASE("overrides replace values") {
  auto d = Document::parse("[run]\nseed = 1\n");
  const auto before = d.hash();
  d.set_override("run.seed=7");
  d.set_override("hill.k = 50");
  CHECK(d.integer("run.seed") == 7);
  CHECK(d.integer("hill.k") == 50);
  CHECK(d.hash() != before);
}

TEST_CASE("hash depends only on content") {
  const auto a = Document::parse("[a]\nx = 1\ny = \"s\"\n");
  const auto b = Document::parse("# other layout\na.y = \"s\"\n[a]\nx = 1.0\n");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
}

TEST_CASE("errors name the field and line") {
  const auto d = Document::parse("[run]\nn = \"ten\"\n");
  try {
    (void)d.number("run.n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "run.n");
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS((void)d.number("run.missing"), ConfigError);
  CHECK_THROWS_AS(Document::parse("[run\n"), ConfigError);
  CHECK_THROWS_AS(Document::parse("x = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(Document::parse("x = \"open\n"), ConfigError);
  CHECK_THROWS_AS((void)Document::parse("x = 1.5\n").integer("x"), ConfigError);
}

TEST_CASE("numeric spellings") {
  CHECK(config::parse_value("inf").number == INFINITY);
  CHECK(config::parse_value("-2.5e-3").number == -2.5e-3);
  CHECK(config::parse_value("[1, 2, 3]").items.size() == 3);
}

}
