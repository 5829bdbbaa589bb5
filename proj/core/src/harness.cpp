#include "revgen/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "revgen/error.hpp"

namespace revgen::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

TrainingResult run_training(const std::vector<corpus::ReviewRecord>& records,
                            const TrainingConfig& cfg, const std::string& out_dir,
                            std::ostream* log, const EpochHook& on_epoch) {
  if (records.empty()) throw ValidationError("run_training: no records");
  if (cfg.epochs < 1) throw ValidationError("run_training: epochs must be >= 1");
  if (cfg.keep_prob <= 0.0 || cfg.keep_prob > 1.0) {
    throw ValidationError("run_training: keep_prob must be in (0, 1]");
  }
  if (cfg.clip_norm <= 0.0) {
    throw ValidationError("run_training: clip_norm must be > 0");
  }

  const corpus::Vocabulary vocab = corpus::build_vocabulary(records);
  const corpus::EncodedStream stream = corpus::encode_records(records, vocab);
  const auto batches = corpus::make_batches(stream, cfg.batch_size, cfg.seq_len);

  Prng init_rng(derive_seed(cfg.seed, kInitStream));
  TrainingResult out;
  out.params = model::init_params(vocab, cfg.hidden, cfg.n_layers, init_rng,
                                  corpus::RatingVector::kFeatures);
  out.optimizer = model::init_optimizer(out.params);

  if (!out_dir.empty()) fs::create_directories(out_dir);

  std::string loss_csv = "epoch,loss\n";
  const double inv_lanes = 1.0 / static_cast<double>(cfg.batch_size);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<model::LstmState> lane_states(cfg.batch_size,
                                              model::zero_state(out.params));
    double loss_sum = 0.0;
    std::size_t step_count = 0;

    for (std::size_t chunk = 0; chunk < batches.size(); ++chunk) {
      const corpus::TrainingBatch& batch = batches[chunk];
      model::Gradients batch_grads = model::zero_gradients(out.params);
      // Lanes are reduced in index order, so the result does not depend on
      // how the work is scheduled.
      for (std::size_t l = 0; l < batch.lanes.size(); ++l) {
        const corpus::BatchLane& lane = batch.lanes[l];
        std::vector<num::Vector> inputs;
        inputs.reserve(lane.inputs.size());
        for (std::size_t t = 0; t < lane.inputs.size(); ++t) {
          inputs.push_back(model::context_encode(lane.inputs[t], lane.aux[t],
                                                 vocab.size()));
        }
        Prng drop_rng(derive_seed(cfg.seed, kDropoutStream,
                                  epoch * batches.size() + chunk, l));
        model::ForwardResult fwd = model::forward_sequence(
            out.params, inputs, lane_states[l], cfg.keep_prob, drop_rng);
        loss_sum += model::sequence_loss(fwd.logits, lane.targets) *
                    static_cast<double>(lane.targets.size());
        step_count += lane.targets.size();
        model::Gradients lane_grads =
            model::backward_bptt(out.params, fwd.cache, lane.targets);
        model::accumulate(batch_grads, lane_grads);
        lane_states[l] = std::move(fwd.final_state);
      }
      model::scale(batch_grads, inv_lanes);
      model::clip_by_global_norm(batch_grads, cfg.clip_norm);
      model::adam_step(out.params, batch_grads, out.optimizer, cfg.lr);
    }

    const double epoch_loss = loss_sum / static_cast<double>(step_count);
    out.epoch_losses.push_back(epoch_loss);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (log != nullptr) {
      (*log) << "epoch=" << epoch << " loss=" << fmt("%.6f", epoch_loss)
             << " wall_s=" << fmt("%.3f", wall) << "\n";
      log->flush();
    }
    loss_csv += std::to_string(epoch) + "," + fmt("%.12f", epoch_loss) + "\n";

    if (!out_dir.empty() && cfg.snapshot_every != 0 &&
        epoch % cfg.snapshot_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch%04zu.ckpt", epoch);
      model::save_checkpoint((fs::path(out_dir) / name).string(), out.params,
                             &out.optimizer);
    }
    if (on_epoch) on_epoch(epoch, epoch_loss, out.params);
  }

  if (!out_dir.empty()) {
    write_text_file((fs::path(out_dir) / "loss.csv").string(), loss_csv);
    model::save_checkpoint((fs::path(out_dir) / "model.ckpt").string(),
                           out.params, &out.optimizer);
  }
  return out;
}

std::vector<corpus::ReviewRecord> reference_reviews(
    const std::vector<corpus::ReviewRecord>& records, std::size_t count) {
  if (count < 1) throw ValidationError("reference_reviews: count must be >= 1");
  if (records.size() < count) {
    throw ValidationError("reference_reviews: need " + std::to_string(count) +
                          " records, have " + std::to_string(records.size()));
  }
  return {records.begin(), records.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::vector<std::string> generate_samples(
    const model::ModelParams& params,
    const std::vector<corpus::ReviewRecord>& refs, std::size_t count,
    double temperature, std::size_t max_len, std::uint64_t base_seed,
    std::size_t epoch) {
  if (refs.empty()) throw ValidationError("generate_samples: no reference records");
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    gen::GenerationContext ctx;
    ctx.aux = refs[i % refs.size()].ratings;
    ctx.temperature = temperature;
    ctx.max_len = max_len;
    ctx.seed = derive_seed(base_seed, kSampleStream, epoch, i);
    ctx.mode = gen::Mode::kSampled;
    out.push_back(gen::generate(params, ctx).text);
  }
  return out;
}

read::MetricReport mean_metrics(const std::vector<std::string>& texts) {
  std::vector<std::string> scored;
  for (const auto& t : texts) {
    if (!read::tokenize_words(t).empty()) scored.push_back(t);
  }
  if (scored.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, nan, nan, nan, nan};
  }
  return read::corpus_report(scored).mean;
}

TrackingResult readability_tracking(
    const std::vector<corpus::ReviewRecord>& records, const TrackingConfig& cfg,
    const std::string& out_dir, std::ostream* log) {
  const auto refs = reference_reviews(records, cfg.reference_count);
  std::vector<std::string> ref_texts;
  for (const auto& r : refs) ref_texts.push_back(r.text);
  const read::MetricReport ref_mean = mean_metrics(ref_texts);

  TrackingResult out;
  const EpochHook hook = [&](std::size_t epoch, double, const model::ModelParams& p) {
    const auto samples = generate_samples(p, refs, cfg.sample_count,
                                          cfg.temperature, cfg.max_len,
                                          cfg.train.seed, epoch);
    out.by_epoch.push_back({epoch, mean_metrics(samples), ref_mean});
  };
  out.training = run_training(records, cfg.train, out_dir, log, hook);

  const auto gen_vals = read::metric_values(out.by_epoch.back().generated);
  const auto ref_vals = read::metric_values(ref_mean);
  for (std::size_t k = 0; k < read::kMetricCount; ++k) {
    out.final_ratios[k] = gen_vals[k] / ref_vals[k];
  }

  if (!out_dir.empty()) {
    write_text_file((fs::path(out_dir) / "readability_by_epoch.csv").string(),
                    format_epoch_csv(out.by_epoch));
    write_text_file((fs::path(out_dir) / "ratios.csv").string(),
                    format_ratio_csv(out.final_ratios));
  }
  return out;
}

std::string format_epoch_csv(const std::vector<EpochMetrics>& rows) {
  std::string out = "epoch,metric,mean_generated,mean_reference\n";
  for (const auto& row : rows) {
    const auto gen_vals = read::metric_values(row.generated);
    const auto ref_vals = read::metric_values(row.reference);
    for (std::size_t k = 0; k < read::kMetricCount; ++k) {
      out += std::to_string(row.epoch);
      out += ',';
      out += read::kMetricNames[k];
      out += ',';
      out += fmt("%.6f", gen_vals[k]);
      out += ',';
      out += fmt("%.6f", ref_vals[k]);
      out += '\n';
    }
  }
  return out;
}

std::string format_ratio_csv(const std::array<double, read::kMetricCount>& ratios) {
  std::string out = "metric,ratio\n";
  for (std::size_t k = 0; k < read::kMetricCount; ++k) {
    out += read::kMetricNames[k];
    out += ',';
    out += fmt("%.6f", ratios[k]);
    out += '\n';
  }
  return out;
}

std::string alpha_report(const model::ModelParams& params,
                         const std::vector<corpus::ReviewRecord>& records,
                         const std::string& user_id, const std::string& item_id,
                         const std::vector<double>& alphas,
                         const gen::GenerationContext& ctx) {
  const auto user = gen::average_profile(records, user_id, gen::ProfileSide::kUser);
  const auto item = gen::average_profile(records, item_id, gen::ProfileSide::kItem);
  const auto sweep = gen::alpha_sweep(params, user, item, alphas, ctx);
  std::string out;
  for (const auto& sample : sweep) {
    out += "alpha=" + fmt("%.2f", sample.alpha) + "\n";
    out += sample.result.text;
    out += "\n\n";
  }
  return out;
}

// ---- planted-polarity corpus ------------------------------------------------

const std::vector<std::string> kPositiveMarkers = {
    "wonderful", "delightful", "excellent", "fantastic", "glorious", "superb"};
const std::vector<std::string> kNegativeMarkers = {
    "terrible", "dreadful", "horrible", "awful", "disgusting", "vile"};

namespace {

const std::vector<std::string> kFrames = {
    "the beer was {} overall and i found the finish {} tonight.",
    "a {} pour with a {} aroma that lingered for ages.",
    "this glass tasted {} from the first sip to the last drop.",
    "{} flavor and a {} body made this a memorable evening pour.",
};

std::string fill_frame(const std::string& frame,
                       const std::vector<std::string>& markers, Prng& rng) {
  std::string out;
  std::size_t i = 0;
  while (i < frame.size()) {
    if (i + 1 < frame.size() && frame[i] == '{' && frame[i + 1] == '}') {
      out += markers[static_cast<std::size_t>(rng.next_u64() % markers.size())];
      i += 2;
    } else {
      out.push_back(frame[i++]);
    }
  }
  return out;
}

}  // namespace

std::vector<corpus::ReviewRecord> make_planted_reviews(std::uint64_t seed,
                                                       std::size_t count) {
  Prng rng(derive_seed(seed, kPlantedStream));
  std::vector<corpus::ReviewRecord> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const bool positive = (k % 2 == 0);
    const auto& markers = positive ? kPositiveMarkers : kNegativeMarkers;

    corpus::ReviewRecord rec;
    const std::size_t user = rng.next_u64() % 20;
    const std::size_t item = rng.next_u64() % 10;
    rec.user_id = "u" + std::to_string(positive ? user : 20 + user);
    rec.item_id = "b" + std::to_string(positive ? item : 10 + item);

    std::array<double, corpus::RatingVector::kFeatures> vals{};
    for (double& v : vals) {
      v = positive ? rng.next_uniform(0.85, 1.0) : rng.next_uniform(0.0, 0.15);
    }
    rec.ratings = corpus::RatingVector::from_values(vals);

    const auto& frame = kFrames[static_cast<std::size_t>(rng.next_u64() % kFrames.size())];
    rec.text = fill_frame(frame, markers, rng);
    out.push_back(std::move(rec));
  }
  return out;
}

int marker_polarity(const std::string& text) {
  bool pos = false, neg = false;
  for (const auto& m : kPositiveMarkers) {
    if (text.find(m) != std::string::npos) {
      pos = true;
      break;
    }
  }
  for (const auto& m : kNegativeMarkers) {
    if (text.find(m) != std::string::npos) {
      neg = true;
      break;
    }
  }
  if (pos == neg) return 0;
  return pos ? 1 : -1;
}

double chi_squared_2x2(double a, double b, double c, double d) {
  const double n = a + b + c + d;
  const double denom = (a + b) * (c + d) * (a + c) * (b + d);
  if (denom <= 0.0) return 0.0;  // a degenerate table carries no evidence
  const double diff = a * d - b * c;
  return n * diff * diff / denom;
}

ConditioningResult conditioning_probe(const model::ModelParams& params,
                                      std::size_t per_group, double temperature,
                                      std::size_t max_len, std::uint64_t seed) {
  if (per_group < 1) {
    throw ValidationError("conditioning_probe: per_group must be >= 1");
  }
  ConditioningResult res;
  const std::array<double, corpus::RatingVector::kFeatures> high = {
      0.925, 0.925, 0.925, 0.925, 0.925};
  const std::array<double, corpus::RatingVector::kFeatures> low = {
      0.075, 0.075, 0.075, 0.075, 0.075};

  for (int group = 0; group < 2; ++group) {
    const bool positive = (group == 0);
    gen::GenerationContext ctx;
    ctx.aux = corpus::RatingVector::from_values(positive ? high : low);
    ctx.temperature = temperature;
    ctx.max_len = max_len;
    ctx.mode = gen::Mode::kSampled;
    for (std::size_t i = 0; i < per_group; ++i) {
      ctx.seed = derive_seed(seed, kSampleStream,
                             positive ? 11u : 22u, i);
      const int polarity = marker_polarity(gen::generate(params, ctx).text);
      if (polarity == 0) {
        ++res.unclassified;
      } else if (positive) {
        (polarity > 0 ? res.pos_given_pos : res.neg_given_pos) += 1;
      } else {
        (polarity > 0 ? res.pos_given_neg : res.neg_given_neg) += 1;
      }
    }
  }
  res.chi_squared = chi_squared_2x2(
      static_cast<double>(res.pos_given_pos), static_cast<double>(res.neg_given_pos),
      static_cast<double>(res.pos_given_neg), static_cast<double>(res.neg_given_neg));
  return res;
}

// ---- small file helpers ------------------------------------------------------

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.flush();
  if (!f) throw IoError("failed writing '" + path + "'");
}

void ensure_out_dir(const std::string& path, bool force) {
  fs::create_directories(path);
  if (!force && fs::directory_iterator(path) != fs::directory_iterator()) {
    throw ValidationError("output directory '" + path + "' is not empty");
  }
}

}  // namespace revgen::harness
