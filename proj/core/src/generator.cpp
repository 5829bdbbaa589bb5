#include "revgen/generator.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "revgen/error.hpp"
#include "revgen/numeric.hpp"

namespace revgen::gen {

GenerationResult generate(const model::ModelParams& params,
                          const GenerationContext& ctx) {
  if (ctx.temperature <= 0.0) {
    throw ValidationError("generate: temperature must be > 0");
  }
  if (ctx.max_len < 1) {
    throw ValidationError("generate: max_len must be >= 1");
  }
  const auto& vocab = params.vocab;
  Prng rng(ctx.seed);
  model::LstmState state = model::zero_state(params);

  GenerationResult out;
  out.text.reserve(ctx.max_len);
  std::size_t token = vocab.start_index();
  for (std::size_t step = 0; step < ctx.max_len; ++step) {
    num::Vector x = model::context_encode(token, ctx.aux, vocab.size());
    num::Vector logits = model::step_logits(params, x, state);
    // Restarting mid-text is never meaningful, so the start token is excluded
    // from every draw.
    logits[vocab.start_index()] = -std::numeric_limits<double>::infinity();

    std::size_t next;
    if (ctx.mode == Mode::kGreedy) {
      next = num::argmax(logits);
    } else {
      for (double& v : logits) v /= ctx.temperature;
      next = num::sample_categorical(num::softmax(logits), rng);
    }
    if (next == vocab.end_index()) {
      return out;
    }
    out.text.push_back(vocab.char_at(next));
    token = next;
  }
  out.truncated = true;
  return out;
}

corpus::RatingVector average_profile(
    const std::vector<corpus::ReviewRecord>& records, const std::string& id,
    ProfileSide side) {
  std::array<double, corpus::RatingVector::kFeatures> sums{};
  std::size_t count = 0;
  for (const auto& rec : records) {
    const std::string& key = side == ProfileSide::kUser ? rec.user_id : rec.item_id;
    if (key != id) continue;
    const auto vals = rec.ratings.values();
    for (std::size_t k = 0; k < vals.size(); ++k) sums[k] += vals[k];
    ++count;
  }
  if (count == 0) {
    throw NotFoundError(std::string("no reviews for ") +
                        (side == ProfileSide::kUser ? "user" : "item") + " '" +
                        id + "'");
  }
  for (double& s : sums) s /= static_cast<double>(count);
  return corpus::RatingVector::from_values(sums);
}

corpus::RatingVector blend_ratings(const corpus::RatingVector& user,
                                   const corpus::RatingVector& item,
                                   double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("blend_ratings: alpha must be in [0, 1]");
  }
  const auto u = user.values();
  const auto b = item.values();
  std::array<double, corpus::RatingVector::kFeatures> mixed{};
  for (std::size_t k = 0; k < mixed.size(); ++k) {
    mixed[k] = alpha * u[k] + (1.0 - alpha) * b[k];
  }
  return corpus::RatingVector::from_values(mixed);
}

std::vector<AlphaSample> alpha_sweep(const model::ModelParams& params,
                                     const corpus::RatingVector& user,
                                     const corpus::RatingVector& item,
                                     const std::vector<double>& alphas,
                                     const GenerationContext& ctx) {
  std::vector<AlphaSample> out;
  out.reserve(alphas.size());
  for (double alpha : alphas) {
    GenerationContext local = ctx;
    local.aux = blend_ratings(user, item, alpha);
    out.push_back({alpha, generate(params, local)});
  }
  return out;
}

}  // namespace revgen::gen
