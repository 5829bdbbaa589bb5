#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "revgen/numeric.hpp"

namespace revgen::corpus {

// Five per-feature scores for one review. Values are raw as loaded and land
// in [0, 1] after normalize_records.
struct RatingVector {
  double appearance{0};
  double aroma{0};
  double palate{0};
  double taste{0};
  double overall{0};

  static constexpr std::size_t kFeatures = 5;

  std::array<double, kFeatures> values() const {
    return {appearance, aroma, palate, taste, overall};
  }
  static RatingVector from_values(const std::array<double, kFeatures>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }

  bool in_unit_range() const {
    for (double x : values()) {
      if (x < 0.0 || x > 1.0) return false;
    }
    return true;
  }

  bool operator==(const RatingVector&) const = default;
};

static constexpr const char* kFeatureNames[RatingVector::kFeatures] = {
    "appearance", "aroma", "palate", "taste", "overall"};

struct ReviewRecord {
  std::string user_id;
  std::string item_id;
  RatingVector ratings;
  std::string text;
  std::optional<std::string> category;
};

// Bijection between the corpus characters (bytes) and dense indices, with two
// reserved framing symbols appended after the corpus characters.
class Vocabulary {
 public:
  Vocabulary() = default;

  // chars must be the distinct corpus characters in their final index order.
  explicit Vocabulary(std::string chars);

  std::size_t size() const { return chars_.size() + 2; }
  std::size_t start_index() const { return chars_.size(); }
  std::size_t end_index() const { return chars_.size() + 1; }

  // Index of a corpus character; throws NotFoundError for characters the
  // vocabulary has never seen.
  std::size_t index_of(char c) const;
  bool contains(char c) const;

  // Corpus character at an index below start_index(); throws IndexError for
  // the reserved symbols and anything past them.
  char char_at(std::size_t index) const;

  // The corpus characters in index order (reserved symbols excluded).
  const std::string& chars() const { return chars_; }

  bool operator==(const Vocabulary& other) const { return chars_ == other.chars_; }

 private:
  std::string chars_;
  std::array<std::int16_t, 256> index_{};
};

// One review corpus flattened to a single token stream. Every review appears
// as START, body characters, END, and each position carries the rating vector
// of the review it belongs to.
struct EncodedStream {
  std::vector<std::uint32_t> tokens;
  std::vector<RatingVector> aux;

  std::size_t size() const { return tokens.size(); }
};

// One contiguous sub-sequence of the stream, already split into next-character
// prediction pairs: targets[t] == the token following inputs[t], and aux[t] is
// the rating vector of inputs[t]'s review.
struct BatchLane {
  std::vector<std::uint32_t> inputs;
  std::vector<std::uint32_t> targets;
  std::vector<RatingVector> aux;
};

// One training step's worth of data: the same chunk window across all lanes.
struct TrainingBatch {
  std::vector<BatchLane> lanes;
};

struct CorpusStats {
  std::size_t users{0};
  std::size_t items{0};
  std::size_t reviews{0};
};

// --- file I/O ---------------------------------------------------------------
// Canonical corpus file: UTF-8, one record per line, tab-separated fields
// user_id, item_id, appearance, aroma, palate, taste, overall, text, and an
// optional trailing category. The text field escapes tab, newline, carriage
// return and backslash as \t, \n, \r, \\.

std::vector<ReviewRecord> load_reviews(const std::string& path);
void write_reviews(const std::string& path,
                   const std::vector<ReviewRecord>& records);

std::string escape_text(const std::string& text);
std::string unescape_text(const std::string& field);  // throws ParseError

// --- preparation ------------------------------------------------------------

// (raw - scale_min) / (scale_max - scale_min); raw must lie inside the scale.
double normalize_rating(double raw, double scale_min, double scale_max);

// normalize_rating applied to every component of every record.
std::vector<ReviewRecord> normalize_records(std::vector<ReviewRecord> records,
                                            double scale_min, double scale_max);

// Keeps records whose text has at least min_chars characters, in order.
std::vector<ReviewRecord> filter_reviews(std::vector<ReviewRecord> records,
                                         std::size_t min_chars);

// Keeps at most max_per_key records per category, in order. Records without a
// category are never dropped.
std::vector<ReviewRecord> cap_per_category(std::vector<ReviewRecord> records,
                                           std::size_t max_per_key);

// ASCII-lowercases every text in place.
std::vector<ReviewRecord> lowercase_records(std::vector<ReviewRecord> records);

// --- encoding ---------------------------------------------------------------

// Distinct characters over all texts, sorted by code point, with the two
// reserved symbols appended. Deterministic for a given record list.
Vocabulary build_vocabulary(const std::vector<ReviewRecord>& records);

// 1-of-C vector: 1.0 at position c, 0.0 elsewhere.
num::Vector encode_onehot(std::size_t c, std::size_t vocab_size);

// Flattens records (in order) into a START/body/END framed token stream.
EncodedStream encode_records(const std::vector<ReviewRecord>& records,
                             const Vocabulary& vocab);

// Splits the stream into batch_size contiguous lanes and chunks each lane into
// (input, target, aux) windows of seq_len (final short chunk kept). Batch k
// holds window k of every lane.
std::vector<TrainingBatch> make_batches(const EncodedStream& stream,
                                        std::size_t batch_size,
                                        std::size_t seq_len);

CorpusStats corpus_stats(const std::vector<ReviewRecord>& records);

// Three-row plain-text table (# Users / # Beers / # Reviews).
std::string format_stats(const CorpusStats& stats);

}  // namespace revgen::corpus
