#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "revgen/corpus.hpp"
#include "revgen/generator.hpp"
#include "revgen/model.hpp"
#include "revgen/readability.hpp"

namespace revgen::harness {

// Sub-stream tags so one user-facing seed can drive every random consumer
// without overlap.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kDropoutStream = 2;
inline constexpr std::uint64_t kSampleStream = 3;
inline constexpr std::uint64_t kPlantedStream = 4;

struct TrainingConfig {
  std::size_t hidden = 128;
  std::size_t n_layers = 2;
  std::size_t seq_len = 64;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  double lr = 2e-3;
  double clip_norm = 5.0;
  double keep_prob = 0.8;
  std::size_t snapshot_every = 0;  // 0 disables periodic checkpoints
  std::uint64_t seed = 0;
};

struct TrainingResult {
  model::ModelParams params;
  model::OptimizerState optimizer;
  std::vector<double> epoch_losses;
};

// Called after each epoch with the loss and current weights.
using EpochHook =
    std::function<void(std::size_t epoch, double loss, const model::ModelParams&)>;

// Trains on the given records (assumed already filtered/normalized). When
// out_dir is non-empty, writes loss.csv and model.ckpt there, plus
// epochNNNN.ckpt snapshots at the configured cadence. Progress lines go to
// *log when provided.
TrainingResult run_training(const std::vector<corpus::ReviewRecord>& records,
                            const TrainingConfig& cfg,
                            const std::string& out_dir = "",
                            std::ostream* log = nullptr,
                            const EpochHook& on_epoch = {});

// First `count` records, the fixed comparison set for readability runs.
std::vector<corpus::ReviewRecord> reference_reviews(
    const std::vector<corpus::ReviewRecord>& records, std::size_t count);

// One sample per index; sample i is conditioned on the ratings of
// refs[i % refs.size()] and seeded from (base_seed, epoch, i).
std::vector<std::string> generate_samples(
    const model::ModelParams& params,
    const std::vector<corpus::ReviewRecord>& refs, std::size_t count,
    double temperature, std::size_t max_len, std::uint64_t base_seed,
    std::size_t epoch);

// Mean metrics over the texts that contain at least one word; NaN if none do.
read::MetricReport mean_metrics(const std::vector<std::string>& texts);

struct TrackingConfig {
  TrainingConfig train;
  std::size_t sample_count = 30;
  std::size_t reference_count = 10;
  double temperature = 0.5;
  std::size_t max_len = 256;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  read::MetricReport generated;
  read::MetricReport reference;
};

struct TrackingResult {
  TrainingResult training;
  std::vector<EpochMetrics> by_epoch;
  std::array<double, read::kMetricCount> final_ratios{};
};

// Trains while scoring generated text against the reference reviews after
// every epoch. Writes readability_by_epoch.csv and ratios.csv to out_dir,
// along with the training artifacts.
TrackingResult readability_tracking(
    const std::vector<corpus::ReviewRecord>& records, const TrackingConfig& cfg,
    const std::string& out_dir, std::ostream* log = nullptr);

std::string format_epoch_csv(const std::vector<EpochMetrics>& rows);
std::string format_ratio_csv(const std::array<double, read::kMetricCount>& ratios);

// Generates one block per alpha ("alpha=X", the sample, blank line) for the
// given user/item pair, reusing one seed across the sweep.
std::string alpha_report(const model::ModelParams& params,
                         const std::vector<corpus::ReviewRecord>& records,
                         const std::string& user_id, const std::string& item_id,
                         const std::vector<double>& alphas,
                         const gen::GenerationContext& ctx);

// ---- planted-polarity corpus ----------------------------------------------

extern const std::vector<std::string> kPositiveMarkers;
extern const std::vector<std::string> kNegativeMarkers;

// Synthetic reviews whose wording and ratings are tied to a hidden polarity:
// even records are positive (high ratings, positive markers), odd ones
// negative. Sentence frames are shared, so polarity is only visible through
// the marker words and the ratings.
std::vector<corpus::ReviewRecord> make_planted_reviews(std::uint64_t seed,
                                                       std::size_t count);

// +1 if the text mentions only positive markers, -1 only negative, 0 neither
// or both.
int marker_polarity(const std::string& text);

// Pearson chi-squared statistic for a 2x2 contingency table.
double chi_squared_2x2(double a, double b, double c, double d);

// 1% critical value for one degree of freedom.
inline constexpr double kChiSquaredCritical1 = 6.634896601021213;

struct ConditioningResult {
  // Rows: conditioning group; columns: marker polarity of the sample.
  std::size_t pos_given_pos = 0;
  std::size_t neg_given_pos = 0;
  std::size_t pos_given_neg = 0;
  std::size_t neg_given_neg = 0;
  std::size_t unclassified = 0;
  double chi_squared = 0.0;
};

// Samples `per_group` texts under a high-rating vector and the same number
// under a low-rating vector, then tests whether marker polarity tracks the
// conditioning.
ConditioningResult conditioning_probe(const model::ModelParams& params,
                                      std::size_t per_group, double temperature,
                                      std::size_t max_len, std::uint64_t seed);

// ---- small file helpers ----------------------------------------------------

void write_text_file(const std::string& path, const std::string& content);

// Creates the directory if needed; refuses to reuse a non-empty one unless
// `force` is set.
void ensure_out_dir(const std::string& path, bool force);

}  // namespace revgen::harness
