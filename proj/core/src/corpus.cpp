#include "revgen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "revgen/error.hpp"

namespace revgen::corpus {

namespace {

constexpr std::size_t kFixedFields = 8;  // everything up to and incl. text

double parse_rating(const std::string& field, const char* name,
                    std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError("line " + std::to_string(line_no) + ": field '" + name +
                     "': not a number: \"" + field + "\"");
  }
  return value;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

Vocabulary::Vocabulary(std::string chars) : chars_(std::move(chars)) {
  index_.fill(-1);
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    index_[static_cast<unsigned char>(chars_[i])] = static_cast<std::int16_t>(i);
  }
}

std::size_t Vocabulary::index_of(char c) const {
  const std::int16_t idx = index_[static_cast<unsigned char>(c)];
  if (idx < 0) {
    throw NotFoundError("vocabulary: character code " +
                        std::to_string(static_cast<unsigned char>(c)) +
                        " not in vocabulary");
  }
  return static_cast<std::size_t>(idx);
}

bool Vocabulary::contains(char c) const {
  return index_[static_cast<unsigned char>(c)] >= 0;
}

char Vocabulary::char_at(std::size_t index) const {
  if (index >= chars_.size()) {
    throw IndexError("vocabulary: index " + std::to_string(index) +
                     " is reserved or out of range (corpus characters: " +
                     std::to_string(chars_.size()) + ")");
  }
  return chars_[index];
}

std::string escape_text(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_text(const std::string& field) {
  std::string out;
  out.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i] != '\\') {
      out += field[i];
      continue;
    }
    if (i + 1 == field.size()) {
      throw ParseError("text field ends with a lone backslash");
    }
    switch (field[++i]) {
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      default:
        throw ParseError(std::string("unknown escape \\") + field[i] +
                         " in text field");
    }
  }
  return out;
}

std::vector<ReviewRecord> load_reviews(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);

  static constexpr const char* kFieldNames[kFixedFields] = {
      "user_id", "item_id",    "appearance", "aroma",
      "palate",  "taste",      "overall",    "text"};

  std::vector<ReviewRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_tabs(line);
    if (fields.size() < kFixedFields) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": missing field '" + kFieldNames[fields.size()] + "'");
    }
    if (fields.size() > kFixedFields + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected at most " +
                       std::to_string(kFixedFields + 1) + " fields, got " +
                       std::to_string(fields.size()));
    }

    ReviewRecord rec;
    rec.user_id = fields[0];
    rec.item_id = fields[1];
    if (rec.user_id.empty() || rec.item_id.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty " +
                       (rec.user_id.empty() ? "user_id" : "item_id"));
    }
    rec.ratings.appearance = parse_rating(fields[2], kFieldNames[2], line_no);
    rec.ratings.aroma = parse_rating(fields[3], kFieldNames[3], line_no);
    rec.ratings.palate = parse_rating(fields[4], kFieldNames[4], line_no);
    rec.ratings.taste = parse_rating(fields[5], kFieldNames[5], line_no);
    rec.ratings.overall = parse_rating(fields[6], kFieldNames[6], line_no);
    rec.text = unescape_text(fields[7]);
    if (rec.text.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty text");
    }
    if (fields.size() == kFixedFields + 1) rec.category = fields[8];
    records.push_back(std::move(rec));
  }
  return records;
}

void write_reviews(const std::string& path,
                   const std::vector<ReviewRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  std::ostringstream buf;
  buf.precision(17);
  for (const auto& rec : records) {
    buf << rec.user_id << '\t' << rec.item_id;
    for (double r : rec.ratings.values()) buf << '\t' << r;
    buf << '\t' << escape_text(rec.text);
    if (rec.category) buf << '\t' << *rec.category;
    buf << '\n';
  }
  out << buf.str();
  if (!out) throw IoError("failed writing corpus file: " + path);
}

double normalize_rating(double raw, double scale_min, double scale_max) {
  if (!(scale_min < scale_max)) {
    throw ValidationError("normalize_rating: scale_min must be below scale_max");
  }
  if (raw < scale_min || raw > scale_max) {
    throw ValidationError("normalize_rating: value " + std::to_string(raw) +
                          " outside scale [" + std::to_string(scale_min) + ", " +
                          std::to_string(scale_max) + "]");
  }
  return (raw - scale_min) / (scale_max - scale_min);
}

std::vector<ReviewRecord> normalize_records(std::vector<ReviewRecord> records,
                                            double scale_min, double scale_max) {
  for (auto& rec : records) {
    auto v = rec.ratings.values();
    for (double& x : v) x = normalize_rating(x, scale_min, scale_max);
    rec.ratings = RatingVector::from_values(v);
  }
  return records;
}

std::vector<ReviewRecord> filter_reviews(std::vector<ReviewRecord> records,
                                         std::size_t min_chars) {
  if (min_chars < 1) throw ValidationError("filter_reviews: min_chars must be >= 1");
  std::erase_if(records, [min_chars](const ReviewRecord& r) {
    return r.text.size() < min_chars;
  });
  return records;
}

std::vector<ReviewRecord> cap_per_category(std::vector<ReviewRecord> records,
                                           std::size_t max_per_key) {
  std::map<std::string, std::size_t> seen;
  std::erase_if(records, [&](const ReviewRecord& r) {
    if (!r.category) return false;
    return ++seen[*r.category] > max_per_key;
  });
  return records;
}

std::vector<ReviewRecord> lowercase_records(std::vector<ReviewRecord> records) {
  for (auto& rec : records) {
    std::transform(rec.text.begin(), rec.text.end(), rec.text.begin(),
                   [](unsigned char c) { return std::tolower(c); });
  }
  return records;
}

Vocabulary build_vocabulary(const std::vector<ReviewRecord>& records) {
  if (records.empty()) {
    throw ValidationError("build_vocabulary: corpus is empty");
  }
  std::set<char> distinct;
  for (const auto& rec : records) {
    distinct.insert(rec.text.begin(), rec.text.end());
  }
  std::string chars(distinct.begin(), distinct.end());
  std::sort(chars.begin(), chars.end(), [](char a, char b) {
    return static_cast<unsigned char>(a) < static_cast<unsigned char>(b);
  });
  return Vocabulary(std::move(chars));
}

num::Vector encode_onehot(std::size_t c, std::size_t vocab_size) {
  if (c >= vocab_size) {
    throw IndexError("encode_onehot: index " + std::to_string(c) +
                     " out of range for vocabulary of " +
                     std::to_string(vocab_size));
  }
  num::Vector v(vocab_size, 0.0);
  v[c] = 1.0;
  return v;
}

EncodedStream encode_records(const std::vector<ReviewRecord>& records,
                             const Vocabulary& vocab) {
  EncodedStream stream;
  std::size_t total = 0;
  for (const auto& rec : records) total += rec.text.size() + 2;
  stream.tokens.reserve(total);
  stream.aux.reserve(total);

  const auto push = [&stream](std::size_t token, const RatingVector& aux) {
    stream.tokens.push_back(static_cast<std::uint32_t>(token));
    stream.aux.push_back(aux);
  };
  for (const auto& rec : records) {
    push(vocab.start_index(), rec.ratings);
    for (char c : rec.text) push(vocab.index_of(c), rec.ratings);
    push(vocab.end_index(), rec.ratings);
  }
  return stream;
}

std::vector<TrainingBatch> make_batches(const EncodedStream& stream,
                                        std::size_t batch_size,
                                        std::size_t seq_len) {
  if (batch_size < 1 || seq_len < 1) {
    throw ValidationError("make_batches: batch_size and seq_len must be >= 1");
  }
  if (stream.size() < batch_size * 2) {
    throw ValidationError("make_batches: stream of " +
                          std::to_string(stream.size()) +
                          " tokens is too short for batch size " +
                          std::to_string(batch_size));
  }
  const std::size_t lane_len = stream.size() / batch_size;
  const std::size_t steps = lane_len - 1;  // positions with a next token
  const std::size_t n_chunks = (steps + seq_len - 1) / seq_len;

  std::vector<TrainingBatch> batches(n_chunks);
  for (auto& b : batches) b.lanes.resize(batch_size);

  for (std::size_t lane = 0; lane < batch_size; ++lane) {
    const std::size_t base = lane * lane_len;
    for (std::size_t chunk = 0; chunk < n_chunks; ++chunk) {
      const std::size_t t0 = chunk * seq_len;
      const std::size_t len = std::min(seq_len, steps - t0);
      BatchLane& out = batches[chunk].lanes[lane];
      out.inputs.reserve(len);
      out.targets.reserve(len);
      out.aux.reserve(len);
      for (std::size_t t = t0; t < t0 + len; ++t) {
        out.inputs.push_back(stream.tokens[base + t]);
        out.targets.push_back(stream.tokens[base + t + 1]);
        out.aux.push_back(stream.aux[base + t]);
      }
    }
  }
  return batches;
}

CorpusStats corpus_stats(const std::vector<ReviewRecord>& records) {
  std::set<std::string> users;
  std::set<std::string> items;
  for (const auto& rec : records) {
    users.insert(rec.user_id);
    items.insert(rec.item_id);
  }
  return {users.size(), items.size(), records.size()};
}

std::string format_stats(const CorpusStats& stats) {
  std::ostringstream out;
  out << "# Users    " << stats.users << '\n'
      << "# Beers    " << stats.items << '\n'
      << "# Reviews  " << stats.reviews << '\n';
  return out.str();
}

}  // namespace revgen::corpus
