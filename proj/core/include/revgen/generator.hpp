#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "revgen/corpus.hpp"
#include "revgen/model.hpp"
#include "revgen/prng.hpp"

namespace revgen::gen {

enum class Mode { kSampled, kGreedy };

struct GenerationContext {
  corpus::RatingVector aux;
  double temperature = 1.0;
  std::size_t max_len = 512;
  std::uint64_t seed = 0;
  Mode mode = Mode::kSampled;
};

struct GenerationResult {
  std::string text;
  bool truncated = false;  // hit max_len before the end token
};

// Which side of a review a rating profile is averaged over.
enum class ProfileSide { kUser, kItem };

struct AlphaSample {
  double alpha = 0.0;
  GenerationResult result;
};

// Runs the model autoregressively from the start token until it emits the end
// token or max_len characters. The start token is never a legal output, so the
// returned text contains ordinary characters only.
GenerationResult generate(const model::ModelParams& params,
                          const GenerationContext& ctx);

// Per-feature mean of the ratings of all reviews by `id` (or of item `id`).
corpus::RatingVector average_profile(
    const std::vector<corpus::ReviewRecord>& records, const std::string& id,
    ProfileSide side);

// alpha * user + (1 - alpha) * item, component-wise.
corpus::RatingVector blend_ratings(const corpus::RatingVector& user,
                                   const corpus::RatingVector& item,
                                   double alpha);

// Generates one sample per alpha. Every sample reuses ctx.seed, so the only
// thing that varies across the sweep is the conditioning vector.
std::vector<AlphaSample> alpha_sweep(const model::ModelParams& params,
                                     const corpus::RatingVector& user,
                                     const corpus::RatingVector& item,
                                     const std::vector<double>& alphas,
                                     const GenerationContext& ctx);

}  // namespace revgen::gen
