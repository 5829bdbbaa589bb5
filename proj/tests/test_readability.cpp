#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "revgen/error.hpp"
#include "revgen/readability.hpp"

using namespace revgen;
using doctest::Approx;

namespace {

void check_report(const read::MetricReport& r,
                  const std::array<double, 8>& expect) {
  const auto got = read::metric_values(r);
  for (std::size_t i = 0; i < 8; ++i) {
    INFO("metric ", read::kMetricNames[i]);
    CHECK(got[i] == Approx(expect[i]).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("sentences split on terminator runs and drop invisible segments") {
  using V = std::vector<std::string>;
  CHECK(read::tokenize_sentences("One. Two! Three?") ==
        V{"One", " Two", " Three"});
  // runs of terminators produce blank segments, which vanish
  CHECK(read::tokenize_sentences("Wait... what?!") == V{"Wait", " what"});
  // no terminator at all: the whole text is one sentence
  CHECK(read::tokenize_sentences("no full stop here") ==
        V{"no full stop here"});
  // trailing text after the last terminator counts
  CHECK(read::tokenize_sentences("Done. and more") == V{"Done", " and more"});
  CHECK(read::tokenize_sentences("   .  ! ").empty());
  CHECK(read::tokenize_sentences("").empty());
}

TEST_CASE("words are whitespace tokens with punctuation trimmed at the edges") {
  using V = std::vector<std::string>;
  CHECK(read::tokenize_words("hop-forward, (crisp) \"ale\"!") ==
        V{"hop-forward", "crisp", "ale"});
  CHECK(read::tokenize_words("it's 7% abv") == V{"it's", "7", "abv"});
  // pure punctuation tokens disappear
  CHECK(read::tokenize_words("-- ... !?") == V{});
  CHECK(read::tokenize_words("  spaced\tout\nlines ") ==
        V{"spaced", "out", "lines"});
}

TEST_CASE("syllables come from vowel groups with a silent terminal e") {
  CHECK(read::count_syllables("cat") == 1);
  CHECK(read::count_syllables("note") == 1);   // silent e drops
  CHECK(read::count_syllables("table") == 2);  // -le keeps its e
  CHECK(read::count_syllables("ale") == 2);    // ends in -le, same rule
  CHECK(read::count_syllables("bee") == 1);
  CHECK(read::count_syllables("beautiful") == 3);
  CHECK(read::count_syllables("carbonation") == 4);
  CHECK(read::count_syllables("dry") == 1);     // y is a vowel
  CHECK(read::count_syllables("rhythm") == 1);  // ...even mid-word
  CHECK(read::count_syllables("queue") == 1);   // one long vowel group
  CHECK(read::count_syllables("be") == 1);      // floor at one
  CHECK(read::count_syllables("it's") == 1);    // apostrophe ignored
  CHECK_THROWS_AS(read::count_syllables("123"), ValidationError);
  CHECK_THROWS_AS(read::count_syllables(""), ValidationError);
}

TEST_CASE("stats fixture: trivial three-word sentence") {
  const auto s = read::compute_stats("The cat sat.");
  CHECK(s.words == 3);
  CHECK(s.sentences == 1);
  CHECK(s.letters_and_digits == 9);
  CHECK(s.syllables == 3);
  CHECK(s.complex_words == 0);
  CHECK(s.long_words == 0);

  check_report(read::report("The cat sat."),
               {-5.8000000000000007, 119.19000000000003, -2.6199999999999992,
                1.2000000000000002, 3.1291000000000002, -8.0266666666666673,
                3.0, 0.0});
}

TEST_CASE("stats fixture: dense polysyllabic prose") {
  const std::string text =
      "This remarkable beverage possesses an extraordinarily complicated "
      "character. It delivers immediate satisfaction!";
  const auto s = read::compute_stats(text);
  CHECK(s.words == 12);
  CHECK(s.sentences == 2);
  CHECK(s.letters_and_digits == 99);
  CHECK(s.syllables == 36);
  CHECK(s.complex_words == 9);
  CHECK(s.long_words == 9);

  check_report(read::report(text),
               {20.427500000000002, -53.054999999999978, 22.150000000000009,
                32.399999999999999, 15.247664890283005, 27.776666666666667,
                81.0, 4.5});
}

TEST_CASE("stats fixture: ordinary tasting-note prose") {
  const std::string text =
      "a pale golden pour with lively carbonation. the aroma brings citrus "
      "and pine? mouthfeel is creamy, finish is dry.";
  const auto s = read::compute_stats(text);
  CHECK(s.words == 19);
  CHECK(s.sentences == 3);
  CHECK(s.letters_and_digits == 91);
  CHECK(s.syllables == 32);
  CHECK(s.complex_words == 3);
  CHECK(s.long_words == 2);

  check_report(read::report(text),
               {4.2950877192982482, 57.922456140350903, 6.7536842105263162,
                8.8491228070175438, 8.8418462747788826, 7.688421052631579,
                16.859649122807017, 0.66666666666666663});
}

TEST_CASE("numeric tokens count one syllable and their digits") {
  const auto s = read::compute_stats("rated 95 points overall");
  CHECK(s.words == 4);
  CHECK(s.syllables == 2 + 1 + 1 + 3);  // "95" contributes exactly one
  CHECK(s.letters_and_digits == 5 + 2 + 6 + 7);
  CHECK(s.long_words == 1);  // "overall" has seven alnum chars
}

TEST_CASE("text without words is rejected, text without terminators is not") {
  CHECK_THROWS_AS(read::compute_stats(""), ValidationError);
  CHECK_THROWS_AS(read::compute_stats(" ... !! "), ValidationError);
  const auto s = read::compute_stats("never finished");
  CHECK(s.sentences == 1);
}

TEST_CASE("corpus report averages per metric and uses population stddev") {
  const std::vector<std::string> texts = {"The cat sat.", "The cat sat.",
                                          "a pale golden pour. it is dry."};
  const auto rep = read::corpus_report(texts);
  REQUIRE(rep.per_text.size() == 3);
  CHECK(rep.per_text[0].ari == Approx(rep.per_text[1].ari));

  const double a = rep.per_text[0].lix;
  const double b = rep.per_text[2].lix;
  CHECK(rep.mean.lix == Approx((2.0 * a + b) / 3.0));
  const double mean = (2.0 * a + b) / 3.0;
  const double var =
      (2.0 * (a - mean) * (a - mean) + (b - mean) * (b - mean)) / 3.0;
  CHECK(rep.stddev.lix == Approx(std::sqrt(var)));

  CHECK_THROWS_AS(read::corpus_report({}), ValidationError);
}

TEST_CASE("csv rendering carries one row per text plus the two summaries") {
  const auto rep = read::corpus_report({"The cat sat.", "Good beer. Cold."});
  const auto csv = read::format_report_csv(rep);

  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "index,ari,fre,fkgl,gfi,smog,cli,lix,rix");
  CHECK(rows[1].substr(0, 2) == "0,");
  CHECK(rows[2].substr(0, 2) == "1,");
  CHECK(rows[3].substr(0, 5) == "mean,");
  CHECK(rows[4].substr(0, 7) == "stddev,");

  // every data row carries 9 comma-separated fields
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto commas =
        static_cast<std::size_t>(std::count(rows[i].begin(), rows[i].end(), ','));
    CHECK(commas == 8);
  }
}
