// Command-line front end: train models, sample reviews, score text and run
// the canned experiments.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "revgen/corpus.hpp"
#include "revgen/error.hpp"
#include "revgen/generator.hpp"
#include "revgen/harness.hpp"
#include "revgen/model.hpp"
#include "revgen/prng.hpp"
#include "revgen/readability.hpp"

namespace {

using namespace revgen;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kRuntimeError = 4;

struct TrainFlags {
  std::string corpus;
  std::string out_dir;
  harness::TrainingConfig cfg;
  std::size_t min_chars = 50;
  double scale_min = 0.0;
  double scale_max = 1.0;
  bool keep_case = false;
  std::size_t cap_category = 0;
};

// Shared corpus preparation: load, drop short reviews, optionally cap per
// category, lowercase, then map ratings onto [0, 1].
std::vector<corpus::ReviewRecord> prepare_corpus(const TrainFlags& t) {
  auto records = corpus::load_reviews(t.corpus);
  records = corpus::filter_reviews(std::move(records), t.min_chars);
  if (t.cap_category > 0) {
    records = corpus::cap_per_category(std::move(records), t.cap_category);
  }
  if (!t.keep_case) records = corpus::lowercase_records(std::move(records));
  return corpus::normalize_records(std::move(records), t.scale_min, t.scale_max);
}

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--corpus", t.corpus, "corpus file (tab-separated records)")
      ->required();
  cmd->add_option("--epochs", t.cfg.epochs, "training epochs");
  cmd->add_option("--hidden", t.cfg.hidden, "hidden units per layer");
  cmd->add_option("--layers", t.cfg.n_layers, "stacked layers");
  cmd->add_option("--seq-len", t.cfg.seq_len, "truncation window");
  cmd->add_option("--batch-size", t.cfg.batch_size, "parallel lanes");
  cmd->add_option("--lr", t.cfg.lr, "learning rate");
  cmd->add_option("--clip", t.cfg.clip_norm, "global gradient-norm cap");
  cmd->add_option("--keep-prob", t.cfg.keep_prob,
                  "inter-layer dropout keep probability");
  cmd->add_option("--snapshot-every", t.cfg.snapshot_every,
                  "checkpoint cadence in epochs (0 = final only)");
  cmd->add_option("--seed", t.cfg.seed, "master random seed");
  cmd->add_option("--min-chars", t.min_chars, "drop reviews shorter than this");
  cmd->add_option("--scale-min", t.scale_min, "raw rating scale minimum");
  cmd->add_option("--scale-max", t.scale_max, "raw rating scale maximum");
  cmd->add_flag("--keep-case", t.keep_case, "skip lowercasing");
  cmd->add_option("--cap-per-category", t.cap_category,
                  "max reviews kept per category (0 = unlimited)");
}

corpus::RatingVector parse_aux(const std::string& spec) {
  std::array<double, corpus::RatingVector::kFeatures> vals{};
  std::stringstream ss(spec);
  std::string part;
  std::size_t n = 0;
  while (std::getline(ss, part, ',')) {
    if (n >= vals.size()) {
      throw ValidationError("--aux needs exactly 5 comma-separated values");
    }
    try {
      vals[n] = std::stod(part);
    } catch (const std::exception&) {
      throw ValidationError("--aux component '" + part + "' is not a number");
    }
    ++n;
  }
  if (n != vals.size()) {
    throw ValidationError("--aux needs exactly 5 comma-separated values");
  }
  const auto aux = corpus::RatingVector::from_values(vals);
  if (!aux.in_unit_range()) {
    throw ValidationError("--aux components must lie in [0, 1]");
  }
  return aux;
}

std::vector<double> parse_alphas(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw ValidationError("--alphas value '" + part + "' is not a number");
    }
  }
  if (out.empty()) throw ValidationError("--alphas needs at least one value");
  return out;
}

int run_train(const TrainFlags& t, bool force) {
  harness::ensure_out_dir(t.out_dir, force);
  const auto records = prepare_corpus(t);
  harness::run_training(records, t.cfg, t.out_dir, &std::cout);
  return kOk;
}

struct GenerateFlags {
  std::string checkpoint;
  std::string aux_spec;
  std::string corpus;
  std::string user_id;
  std::string item_id;
  double alpha = 1.0;
  bool has_alpha = false;
  double temperature = 1.0;
  std::size_t max_len = 512;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  bool greedy = false;
};

int run_generate(const GenerateFlags& g) {
  const model::Checkpoint ck = model::load_checkpoint(g.checkpoint);

  corpus::RatingVector aux;
  if (!g.aux_spec.empty()) {
    aux = parse_aux(g.aux_spec);
  } else if (g.has_alpha) {
    const auto records = corpus::load_reviews(g.corpus);
    const auto user = gen::average_profile(records, g.user_id,
                                           gen::ProfileSide::kUser);
    const auto item = gen::average_profile(records, g.item_id,
                                           gen::ProfileSide::kItem);
    aux = gen::blend_ratings(user, item, g.alpha);
  } else {
    throw ValidationError("provide either --aux or --alpha with a rating source");
  }

  for (std::size_t i = 0; i < g.count; ++i) {
    gen::GenerationContext ctx;
    ctx.aux = aux;
    ctx.temperature = g.temperature;
    ctx.max_len = g.max_len;
    ctx.seed = derive_seed(g.seed, harness::kSampleStream, 0, i);
    ctx.mode = g.greedy ? gen::Mode::kGreedy : gen::Mode::kSampled;
    const auto result = gen::generate(ck.params, ctx);
    std::cout << result.text << "\n";
    if (g.count > 1 && i + 1 < g.count) std::cout << "\n";
  }
  return kOk;
}

struct ScoreFlags {
  std::string corpus;
  std::string input;
  std::string out_path;
};

int run_score(const ScoreFlags& s) {
  std::vector<std::string> texts;
  if (!s.corpus.empty()) {
    for (const auto& rec : corpus::load_reviews(s.corpus)) {
      texts.push_back(rec.text);
    }
  } else {
    std::ifstream f(s.input, std::ios::binary);
    if (!f) throw IoError("cannot open '" + s.input + "' for reading");
    std::string line;
    while (std::getline(f, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) texts.push_back(line);
    }
    if (texts.empty()) throw ValidationError("'" + s.input + "' has no text lines");
  }
  const std::string csv = read::format_report_csv(read::corpus_report(texts));
  if (s.out_path.empty()) {
    std::cout << csv;
  } else {
    harness::write_text_file(s.out_path, csv);
  }
  return kOk;
}

int run_stats(const std::string& path) {
  std::cout << corpus::format_stats(corpus::corpus_stats(corpus::load_reviews(path)));
  return kOk;
}

struct ReadabilityExpFlags {
  TrainFlags train;
  std::size_t samples = 30;
  std::size_t references = 10;
  double temperature = 0.5;
  std::size_t max_len = 256;
};

int run_exp_readability(const ReadabilityExpFlags& r, bool force) {
  harness::ensure_out_dir(r.train.out_dir, force);
  const auto records = prepare_corpus(r.train);
  harness::TrackingConfig cfg;
  cfg.train = r.train.cfg;
  cfg.sample_count = r.samples;
  cfg.reference_count = r.references;
  cfg.temperature = r.temperature;
  cfg.max_len = r.max_len;
  harness::readability_tracking(records, cfg, r.train.out_dir, &std::cout);
  return kOk;
}

struct ConditioningExpFlags {
  std::string out_dir;
  harness::TrainingConfig cfg;
  std::size_t review_count = 2000;
  std::size_t per_group = 100;
  double temperature = 0.5;
  std::size_t max_len = 128;
};

int run_exp_conditioning(const ConditioningExpFlags& c, bool force) {
  harness::ensure_out_dir(c.out_dir, force);
  namespace fs = std::filesystem;
  const auto records = harness::make_planted_reviews(c.cfg.seed, c.review_count);
  corpus::write_reviews((fs::path(c.out_dir) / "planted.tsv").string(), records);

  const auto trained = harness::run_training(records, c.cfg, c.out_dir, &std::cout);
  const auto probe = harness::conditioning_probe(trained.params, c.per_group,
                                                 c.temperature, c.max_len,
                                                 c.cfg.seed);
  std::string csv = "cell,count\n";
  csv += "pos_given_pos," + std::to_string(probe.pos_given_pos) + "\n";
  csv += "neg_given_pos," + std::to_string(probe.neg_given_pos) + "\n";
  csv += "pos_given_neg," + std::to_string(probe.pos_given_neg) + "\n";
  csv += "neg_given_neg," + std::to_string(probe.neg_given_neg) + "\n";
  csv += "unclassified," + std::to_string(probe.unclassified) + "\n";
  {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "chi_squared,%.6f\n", probe.chi_squared);
    csv += buf;
  }
  harness::write_text_file((fs::path(c.out_dir) / "conditioning.csv").string(), csv);

  gen::GenerationContext ctx;
  ctx.temperature = c.temperature;
  ctx.max_len = c.max_len;
  ctx.seed = derive_seed(c.cfg.seed, harness::kSampleStream, 777, 0);
  const std::string sweep = harness::alpha_report(
      trained.params, records, "u0", "b10", {1.0, 0.5, 0.0}, ctx);
  harness::write_text_file((fs::path(c.out_dir) / "alpha_samples.txt").string(),
                           sweep);
  std::cout << "chi_squared=" << probe.chi_squared << "\n";
  return kOk;
}

struct AlphaExpFlags {
  std::string checkpoint;
  std::string corpus;
  std::string out_dir;
  std::string user_id;
  std::string item_id;
  std::string alphas = "1.0,0.5,0.0";
  double temperature = 0.5;
  std::size_t max_len = 256;
  std::uint64_t seed = 0;
};

int run_exp_alpha(const AlphaExpFlags& a, bool force) {
  harness::ensure_out_dir(a.out_dir, force);
  const model::Checkpoint ck = model::load_checkpoint(a.checkpoint);
  const auto records = corpus::load_reviews(a.corpus);
  gen::GenerationContext ctx;
  ctx.temperature = a.temperature;
  ctx.max_len = a.max_len;
  ctx.seed = derive_seed(a.seed, harness::kSampleStream, 777, 0);
  const std::string report = harness::alpha_report(
      ck.params, records, a.user_id, a.item_id, parse_alphas(a.alphas), ctx);
  harness::write_text_file(
      (std::filesystem::path(a.out_dir) / "alpha_samples.txt").string(), report);
  std::cout << report;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditioned character-level review generator"};
  app.set_config("--config", "", "flat key=value config file (flags win)");
  app.require_subcommand(1);

  // train
  TrainFlags train_flags;
  bool train_force = false;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  add_train_flags(train_cmd, train_flags);
  train_cmd->add_option("--out-dir", train_flags.out_dir, "artifact directory")
      ->required();
  train_cmd->add_flag("--force", train_force, "allow a non-empty --out-dir");

  // generate
  GenerateFlags gen_flags;
  CLI::App* gen_cmd = app.add_subcommand("generate", "sample text from a checkpoint");
  gen_cmd->add_option("--checkpoint", gen_flags.checkpoint, "model checkpoint")
      ->required();
  auto* aux_opt = gen_cmd->add_option("--aux", gen_flags.aux_spec,
                                      "rating vector, 5 comma-separated values in [0,1]");
  auto* corpus_opt = gen_cmd->add_option("--corpus", gen_flags.corpus,
                                         "corpus for rating profiles");
  auto* user_opt = gen_cmd->add_option("--user", gen_flags.user_id, "user id");
  auto* item_opt = gen_cmd->add_option("--item", gen_flags.item_id, "item id");
  auto* alpha_opt = gen_cmd->add_option("--alpha", gen_flags.alpha,
                                        "user/item profile blend weight in [0,1]");
  alpha_opt->excludes(aux_opt);
  aux_opt->excludes(alpha_opt);
  alpha_opt->needs(corpus_opt);
  alpha_opt->needs(user_opt);
  alpha_opt->needs(item_opt);
  gen_cmd->add_option("--temperature", gen_flags.temperature, "softmax temperature");
  gen_cmd->add_option("--max-len", gen_flags.max_len, "generation cap in characters");
  gen_cmd->add_option("--seed", gen_flags.seed, "master random seed");
  gen_cmd->add_option("--count", gen_flags.count, "number of samples");
  gen_cmd->add_flag("--greedy", gen_flags.greedy, "argmax decoding");

  // score
  ScoreFlags score_flags;
  CLI::App* score_cmd = app.add_subcommand("score", "readability metrics as CSV");
  auto* score_corpus = score_cmd->add_option("--corpus", score_flags.corpus,
                                             "score the texts of a corpus file");
  auto* score_input = score_cmd->add_option("--input", score_flags.input,
                                            "score plain text, one text per line");
  score_corpus->excludes(score_input);
  score_input->excludes(score_corpus);
  score_cmd->add_option("--out", score_flags.out_path, "write CSV here instead of stdout");

  // stats
  std::string stats_corpus;
  CLI::App* stats_cmd = app.add_subcommand("stats", "corpus summary counts");
  stats_cmd->add_option("--corpus", stats_corpus, "corpus file")->required();

  // experiment
  CLI::App* exp_cmd = app.add_subcommand("experiment", "canned end-to-end runs");
  exp_cmd->require_subcommand(1);

  ReadabilityExpFlags read_flags;
  bool read_force = false;
  CLI::App* exp_read = exp_cmd->add_subcommand(
      "readability", "track generated vs corpus readability per epoch");
  add_train_flags(exp_read, read_flags.train);
  exp_read->add_option("--out-dir", read_flags.train.out_dir, "artifact directory")
      ->required();
  exp_read->add_option("--samples", read_flags.samples, "generated samples per epoch");
  exp_read->add_option("--references", read_flags.references,
                       "reference reviews to compare against");
  exp_read->add_option("--temperature", read_flags.temperature, "sampling temperature");
  exp_read->add_option("--max-len", read_flags.max_len, "generation cap");
  exp_read->add_flag("--force", read_force, "allow a non-empty --out-dir");

  ConditioningExpFlags cond_flags;
  bool cond_force = false;
  CLI::App* exp_cond = exp_cmd->add_subcommand(
      "conditioning", "train on a planted-polarity corpus and test divergence");
  exp_cond->add_option("--out-dir", cond_flags.out_dir, "artifact directory")
      ->required();
  exp_cond->add_option("--reviews", cond_flags.review_count, "planted corpus size");
  exp_cond->add_option("--per-group", cond_flags.per_group, "samples per rating group");
  exp_cond->add_option("--epochs", cond_flags.cfg.epochs, "training epochs");
  exp_cond->add_option("--hidden", cond_flags.cfg.hidden, "hidden units per layer");
  exp_cond->add_option("--layers", cond_flags.cfg.n_layers, "stacked layers");
  exp_cond->add_option("--seq-len", cond_flags.cfg.seq_len, "truncation window");
  exp_cond->add_option("--batch-size", cond_flags.cfg.batch_size, "parallel lanes");
  exp_cond->add_option("--lr", cond_flags.cfg.lr, "learning rate");
  exp_cond->add_option("--keep-prob", cond_flags.cfg.keep_prob,
                       "inter-layer dropout keep probability");
  exp_cond->add_option("--temperature", cond_flags.temperature, "sampling temperature");
  exp_cond->add_option("--max-len", cond_flags.max_len, "generation cap");
  exp_cond->add_option("--seed", cond_flags.cfg.seed, "master random seed");
  exp_cond->add_flag("--force", cond_force, "allow a non-empty --out-dir");

  AlphaExpFlags alpha_flags;
  bool alpha_force = false;
  CLI::App* exp_alpha = exp_cmd->add_subcommand(
      "alpha", "blend user and item profiles and sample at each weight");
  exp_alpha->add_option("--checkpoint", alpha_flags.checkpoint, "model checkpoint")
      ->required();
  exp_alpha->add_option("--corpus", alpha_flags.corpus, "corpus for rating profiles")
      ->required();
  exp_alpha->add_option("--out-dir", alpha_flags.out_dir, "artifact directory")
      ->required();
  exp_alpha->add_option("--user", alpha_flags.user_id, "user id")->required();
  exp_alpha->add_option("--item", alpha_flags.item_id, "item id")->required();
  exp_alpha->add_option("--alphas", alpha_flags.alphas, "comma-separated blend weights");
  exp_alpha->add_option("--temperature", alpha_flags.temperature, "sampling temperature");
  exp_alpha->add_option("--max-len", alpha_flags.max_len, "generation cap");
  exp_alpha->add_option("--seed", alpha_flags.seed, "master random seed");
  exp_alpha->add_flag("--force", alpha_force, "allow a non-empty --out-dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  gen_flags.has_alpha = alpha_opt->count() > 0;

  try {
    if (train_cmd->parsed()) return run_train(train_flags, train_force);
    if (gen_cmd->parsed()) return run_generate(gen_flags);
    if (score_cmd->parsed()) return run_score(score_flags);
    if (stats_cmd->parsed()) return run_stats(stats_corpus);
    if (exp_cmd->parsed()) {
      if (exp_read->parsed()) return run_exp_readability(read_flags, read_force);
      if (exp_cond->parsed()) return run_exp_conditioning(cond_flags, cond_force);
      if (exp_alpha->parsed()) return run_exp_alpha(alpha_flags, alpha_force);
    }
    std::cerr << "error: no subcommand\n";
    return kConfigError;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const VersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}
