#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace revgen::read {

struct TextStats {
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t letters_and_digits = 0;  // alnum chars inside retained words
  std::size_t syllables = 0;
  std::size_t complex_words = 0;  // three or more syllables
  std::size_t long_words = 0;     // more than six alnum chars
};

// One value per formula, in the order of kMetricNames.
struct MetricReport {
  double ari = 0.0;
  double fre = 0.0;
  double fkgl = 0.0;
  double gfi = 0.0;
  double smog = 0.0;
  double cli = 0.0;
  double lix = 0.0;
  double rix = 0.0;
};

inline constexpr std::size_t kMetricCount = 8;
inline constexpr std::array<const char*, kMetricCount> kMetricNames = {
    "ari", "fre", "fkgl", "gfi", "smog", "cli", "lix", "rix"};

std::array<double, kMetricCount> metric_values(const MetricReport& r);

struct CorpusReport {
  std::vector<MetricReport> per_text;
  MetricReport mean;
  MetricReport stddev;  // population standard deviation
};

// Sentences are maximal runs between '.', '!', '?' terminators; segments with
// no visible characters are dropped, and text with no terminator is one
// sentence.
std::vector<std::string> tokenize_sentences(const std::string& text);

// Whitespace-separated tokens with non-alphanumeric characters stripped from
// both ends; tokens without any alphanumeric character are dropped.
std::vector<std::string> tokenize_words(const std::string& text);

// Vowel-group count (aeiouy, case-insensitive) with a terminal silent 'e'
// dropped, never less than one. Words without letters are rejected.
std::size_t count_syllables(const std::string& word);

TextStats compute_stats(const std::string& text);

double automated_readability_index(const TextStats& s);
double flesch_reading_ease(const TextStats& s);
double flesch_kincaid_grade(const TextStats& s);
double gunning_fog_index(const TextStats& s);
double smog_grade(const TextStats& s);
double coleman_liau_index(const TextStats& s);
double lix_score(const TextStats& s);
double rix_score(const TextStats& s);

MetricReport report(const std::string& text);

CorpusReport corpus_report(const std::vector<std::string>& texts);

// CSV with one row per text plus mean and stddev summary rows.
std::string format_report_csv(const CorpusReport& rep);

}  // namespace revgen::read
