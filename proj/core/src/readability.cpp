#include "revgen/readability.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "revgen/error.hpp"

namespace revgen::read {

namespace {

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_alpha(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool is_vowel(char c) {
  const char l = lower(c);
  return l == 'a' || l == 'e' || l == 'i' || l == 'o' || l == 'u' || l == 'y';
}

bool has_visible(const std::string& s) {
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c)) == 0) return true;
  }
  return false;
}

double ratio(std::size_t a, std::size_t b) {
  return static_cast<double>(a) / static_cast<double>(b);
}

void check_stats(const TextStats& s, const char* metric) {
  if (s.words == 0 || s.sentences == 0) {
    throw ValidationError(std::string(metric) +
                          ": stats must cover at least one word and sentence");
  }
}

void append_row(std::string& out, const char* label, const MetricReport& r) {
  out += label;
  char buf[64];
  for (double v : metric_values(r)) {
    std::snprintf(buf, sizeof(buf), ",%.6f", v);
    out += buf;
  }
  out += '\n';
}

}  // namespace

std::array<double, kMetricCount> metric_values(const MetricReport& r) {
  return {r.ari, r.fre, r.fkgl, r.gfi, r.smog, r.cli, r.lix, r.rix};
}

std::vector<std::string> tokenize_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?') {
      if (has_visible(current)) out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (has_visible(current)) out.push_back(current);
  return out;
}

std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    if (j > i) {
      std::size_t lo = i, hi = j;
      while (lo < hi && !is_alnum(text[lo])) ++lo;
      while (hi > lo && !is_alnum(text[hi - 1])) --hi;
      if (hi > lo) out.push_back(text.substr(lo, hi - lo));
    }
    i = j;
  }
  return out;
}

std::size_t count_syllables(const std::string& word) {
  bool any_letter = false;
  for (char c : word) {
    if (is_alpha(c)) {
      any_letter = true;
      break;
    }
  }
  if (!any_letter) {
    throw ValidationError("count_syllables: '" + word + "' has no letters");
  }

  std::size_t groups = 0;
  bool in_group = false;
  for (char c : word) {
    if (is_alpha(c) && is_vowel(c)) {
      if (!in_group) ++groups;
      in_group = true;
    } else {
      in_group = false;
    }
  }

  // Terminal silent 'e' ("note" -> 1) unless the word ends in a consonant+le
  // cluster ("table" keeps its final syllable).
  const std::size_t n = word.size();
  if (groups > 1 && n >= 1 && lower(word[n - 1]) == 'e') {
    const bool ends_le = n >= 2 && lower(word[n - 2]) == 'l';
    if (!ends_le) --groups;
  }
  return groups == 0 ? 1 : groups;
}

TextStats compute_stats(const std::string& text) {
  const auto words = tokenize_words(text);
  if (words.empty()) {
    throw ValidationError("compute_stats: text has no words");
  }
  TextStats s;
  s.words = words.size();
  const auto sentences = tokenize_sentences(text);
  s.sentences = sentences.empty() ? 1 : sentences.size();
  for (const auto& w : words) {
    std::size_t alnum = 0;
    bool any_letter = false;
    for (char c : w) {
      if (is_alnum(c)) ++alnum;
      if (is_alpha(c)) any_letter = true;
    }
    s.letters_and_digits += alnum;
    // Purely numeric tokens ("42") still count as one spoken unit.
    const std::size_t syl = any_letter ? count_syllables(w) : 1;
    s.syllables += syl;
    if (syl >= 3) ++s.complex_words;
    if (alnum > 6) ++s.long_words;
  }
  return s;
}

double automated_readability_index(const TextStats& s) {
  check_stats(s, "automated_readability_index");
  return 4.71 * ratio(s.letters_and_digits, s.words) +
         0.5 * ratio(s.words, s.sentences) - 21.43;
}

double flesch_reading_ease(const TextStats& s) {
  check_stats(s, "flesch_reading_ease");
  return 206.835 - 1.015 * ratio(s.words, s.sentences) -
         84.6 * ratio(s.syllables, s.words);
}

double flesch_kincaid_grade(const TextStats& s) {
  check_stats(s, "flesch_kincaid_grade");
  return 0.39 * ratio(s.words, s.sentences) +
         11.8 * ratio(s.syllables, s.words) - 15.59;
}

double gunning_fog_index(const TextStats& s) {
  check_stats(s, "gunning_fog_index");
  return 0.4 * (ratio(s.words, s.sentences) +
                100.0 * ratio(s.complex_words, s.words));
}

double smog_grade(const TextStats& s) {
  check_stats(s, "smog_grade");
  return 1.0430 * std::sqrt(static_cast<double>(s.complex_words) * 30.0 /
                            static_cast<double>(s.sentences)) +
         3.1291;
}

double coleman_liau_index(const TextStats& s) {
  check_stats(s, "coleman_liau_index");
  const double l = 100.0 * ratio(s.letters_and_digits, s.words);
  const double sp = 100.0 * ratio(s.sentences, s.words);
  return 0.0588 * l - 0.296 * sp - 15.8;
}

double lix_score(const TextStats& s) {
  check_stats(s, "lix_score");
  return ratio(s.words, s.sentences) + 100.0 * ratio(s.long_words, s.words);
}

double rix_score(const TextStats& s) {
  check_stats(s, "rix_score");
  return ratio(s.long_words, s.sentences);
}

MetricReport report(const std::string& text) {
  const TextStats s = compute_stats(text);
  MetricReport r;
  r.ari = automated_readability_index(s);
  r.fre = flesch_reading_ease(s);
  r.fkgl = flesch_kincaid_grade(s);
  r.gfi = gunning_fog_index(s);
  r.smog = smog_grade(s);
  r.cli = coleman_liau_index(s);
  r.lix = lix_score(s);
  r.rix = rix_score(s);
  return r;
}

CorpusReport corpus_report(const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw ValidationError("corpus_report: no texts");
  }
  CorpusReport rep;
  rep.per_text.reserve(texts.size());
  std::array<double, kMetricCount> sum{};
  std::array<double, kMetricCount> sum_sq{};
  for (const auto& t : texts) {
    rep.per_text.push_back(report(t));
    const auto vals = metric_values(rep.per_text.back());
    for (std::size_t k = 0; k < kMetricCount; ++k) {
      sum[k] += vals[k];
      sum_sq[k] += vals[k] * vals[k];
    }
  }
  const double n = static_cast<double>(texts.size());
  std::array<double, kMetricCount> mean{};
  std::array<double, kMetricCount> sd{};
  for (std::size_t k = 0; k < kMetricCount; ++k) {
    mean[k] = sum[k] / n;
    const double var = sum_sq[k] / n - mean[k] * mean[k];
    sd[k] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  rep.mean = {mean[0], mean[1], mean[2], mean[3], mean[4], mean[5], mean[6], mean[7]};
  rep.stddev = {sd[0], sd[1], sd[2], sd[3], sd[4], sd[5], sd[6], sd[7]};
  return rep;
}

std::string format_report_csv(const CorpusReport& rep) {
  std::string out = "index";
  for (const char* name : kMetricNames) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t i = 0; i < rep.per_text.size(); ++i) {
    append_row(out, std::to_string(i).c_str(), rep.per_text[i]);
  }
  append_row(out, "mean", rep.mean);
  append_row(out, "stddev", rep.stddev);
  return out;
}

}  // namespace revgen::read
