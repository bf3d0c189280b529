#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>

#include "ttsfront/textgrid.hpp"

using namespace ttsfront;

namespace {

const char* kLongForm = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 0.3
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 0.3
        intervals: size = 2
        intervals [1]:
            xmin = 0.00
            xmax = 0.10
            text = "b"
        intervals [2]:
            xmin = 0.10
            xmax = 0.30
            text = "o"
)";

const char* kShortForm = R"(File type = "ooTextFile"
Object class = "TextGrid"

0
0.3
<exists>
1
"IntervalTier"
"phones"
0
0.3
2
0
0.1
"b"
0.1
0.3
"o"
)";

}  // namespace

TEST_CASE("long-form TextGrid with two labeled intervals", "[textgrid]") {
  auto tiers = textgrid::parse(kLongForm);
  REQUIRE(tiers.size() == 1);
  CHECK(tiers[0].name == "phones");
  REQUIRE(tiers[0].intervals.size() == 2);
  CHECK(tiers[0].intervals[0].start_s == 0.0);
  CHECK(tiers[0].intervals[0].end_s == 0.10);
  CHECK(tiers[0].intervals[0].label == "b");
  CHECK(tiers[0].intervals[1].start_s == 0.10);
  CHECK(tiers[0].intervals[1].end_s == 0.30);
  CHECK(tiers[0].intervals[1].label == "o");
}

TEST_CASE("short form parses to the same tiers", "[textgrid]") {
  auto a = textgrid::parse(kLongForm);
  auto b = textgrid::parse(kShortForm);
  REQUIRE(a.size() == b.size());
  REQUIRE(a[0].intervals.size() == b[0].intervals.size());
  for (size_t i = 0; i < a[0].intervals.size(); ++i) {
    CHECK(a[0].intervals[i].start_s == b[0].intervals[i].start_s);
    CHECK(a[0].intervals[i].end_s == b[0].intervals[i].end_s);
    CHECK(a[0].intervals[i].label == b[0].intervals[i].label);
  }
}

TEST_CASE("tier with declared size 0 is an empty tier", "[textgrid]") {
  std::string text =
      "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n"
      "xmin = 0\nxmax = 1\ntiers? <exists>\nsize = 1\nitem []:\n"
      "    item [1]:\n        class = \"IntervalTier\"\n"
      "        name = \"empty\"\n        xmin = 0\n        xmax = 1\n"
      "        intervals: size = 0\n";
  auto tiers = textgrid::parse(text);
  REQUIRE(tiers.size() == 1);
  CHECK(tiers[0].intervals.empty());
}

TEST_CASE("missing header is an error at line 1", "[textgrid]") {
  try {
    textgrid::parse("not a textgrid\nat all\n");
    FAIL("expected ParseError");
  } catch (const textgrid::ParseError& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("point tiers are rejected", "[textgrid]") {
  std::string text =
      "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n"
      "xmin = 0\nxmax = 1\ntiers? <exists>\nsize = 1\nitem []:\n"
      "    item [1]:\n        class = \"TextTier\"\n"
      "        name = \"points\"\n        xmin = 0\n        xmax = 1\n"
      "        points: size = 0\n";
  CHECK_THROWS_WITH(textgrid::parse(text),
                    Catch::Matchers::ContainsSubstring("point tiers"));
}

TEST_CASE("non-monotone interval boundaries are rejected", "[textgrid]") {
  std::string text =
      "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n"
      "0\n1\n<exists>\n1\n\"IntervalTier\"\n\"phones\"\n0\n1\n2\n"
      "0\n0.6\n\"a\"\n0.5\n1\n\"b\"\n";
  CHECK_THROWS_AS(textgrid::parse(text), textgrid::ParseError);
}

TEST_CASE("labels with quotes and spaces survive verbatim", "[textgrid]") {
  std::vector<textgrid::Tier> tiers(1);
  tiers[0].name = "words";
  tiers[0].xmin = 0;
  tiers[0].xmax = 1;
  tiers[0].intervals = {{0.0, 0.5, "he said \"hi\""}, {0.5, 1.0, "  "}};
  auto again = textgrid::parse(textgrid::serialize(tiers));
  REQUIRE(again.size() == 1);
  CHECK(again[0].intervals[0].label == "he said \"hi\"");
  CHECK(again[0].intervals[1].label == "  ");
}

TEST_CASE("parse-serialize-parse is identity on times and labels",
          "[textgrid]") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> len(0.01, 0.8);
  std::uniform_int_distribution<int> n_iv(1, 12);
  std::uniform_int_distribution<int> n_tier(1, 3);
  std::uniform_int_distribution<int> lab(0, 25);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<textgrid::Tier> tiers(static_cast<size_t>(n_tier(rng)));
    for (size_t ti = 0; ti < tiers.size(); ++ti) {
      tiers[ti].name = "tier" + std::to_string(ti);
      double t = 0.0;
      int n = n_iv(rng);
      for (int i = 0; i < n; ++i) {
        double e = t + len(rng);
        tiers[ti].intervals.push_back(
            {t, e, std::string(1, static_cast<char>('a' + lab(rng)))});
        t = e;
      }
      tiers[ti].xmin = 0.0;
      tiers[ti].xmax = t;
    }
    auto first = textgrid::parse(textgrid::serialize(tiers));
    auto second = textgrid::parse(textgrid::serialize(first));
    REQUIRE(first.size() == second.size());
    for (size_t ti = 0; ti < first.size(); ++ti) {
      REQUIRE(first[ti].intervals.size() == second[ti].intervals.size());
      REQUIRE(first[ti].intervals.size() == tiers[ti].intervals.size());
      for (size_t i = 0; i < first[ti].intervals.size(); ++i) {
        // exact: %.17g round-trips doubles
        CHECK(first[ti].intervals[i].start_s == tiers[ti].intervals[i].start_s);
        CHECK(first[ti].intervals[i].end_s == tiers[ti].intervals[i].end_s);
        CHECK(first[ti].intervals[i].label == tiers[ti].intervals[i].label);
        CHECK(second[ti].intervals[i].start_s ==
              first[ti].intervals[i].start_s);
      }
    }
  }
}
