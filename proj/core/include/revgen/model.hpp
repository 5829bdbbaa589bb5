#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "revgen/corpus.hpp"
#include "revgen/numeric.hpp"
#include "revgen/prng.hpp"

namespace revgen::model {

// Gate parameters for one stacked-LSTM layer. Every gate matrix maps the
// concatenated [input ; previous hidden] vector to hidden units.
struct LayerParams {
  num::Matrix w_f, w_i, w_c, w_o;
  num::Vector b_f, b_i, b_c, b_o;
};

struct ModelParams {
  std::vector<LayerParams> layers;
  num::Matrix w_y;  // vocab x hidden output projection
  num::Vector b_y;
  corpus::Vocabulary vocab;
  std::size_t aux_dim{corpus::RatingVector::kFeatures};
  std::size_t hidden{0};

  std::size_t input_width() const { return vocab.size() + aux_dim; }
};

// Per-layer cell and hidden state threaded between time steps.
struct LstmState {
  std::vector<num::Vector> c;
  std::vector<num::Vector> h;
};

// Same tensor tree as ModelParams, holding d(loss)/d(parameter).
struct Gradients {
  std::vector<LayerParams> layers;
  num::Matrix w_y;
  num::Vector b_y;
};

// First/second moment accumulators per tensor, in tensor_list order.
struct OptimizerState {
  std::vector<num::Vector> m;
  std::vector<num::Vector> v;
  std::uint64_t step{0};
};

struct AdamConfig {
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
};

// Everything backward_bptt needs from one forward pass.
struct StepLayerCache {
  num::Vector z;  // [x ; h_prev]
  num::Vector f, i, g, o;
  num::Vector c, c_prev, tc;
  num::Vector h;     // post-activation hidden (pre-dropout)
  num::Vector mask;  // dropout mask applied when feeding the next layer; empty = identity
};

struct ForwardCache {
  std::vector<std::vector<StepLayerCache>> steps;  // [time][layer]
  std::size_t input_width{0};
  std::size_t hidden{0};
};

struct ForwardResult {
  std::vector<num::Vector> logits;
  LstmState final_state;
  ForwardCache cache;
};

// --- construction -----------------------------------------------------------

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per matrix; forget-gate
// biases start at 1.0, all other biases at 0.
ModelParams init_params(const corpus::Vocabulary& vocab, std::size_t hidden,
                        std::size_t n_layers, Prng& rng,
                        std::size_t aux_dim = corpus::RatingVector::kFeatures);

LstmState zero_state(const ModelParams& params);
Gradients zero_gradients(const ModelParams& params);
OptimizerState init_optimizer(const ModelParams& params);

// Fixed tensor order shared by the optimizer, the gradient algebra and the
// checkpoint format: per layer W_f, W_i, W_c, W_o, b_f, b_i, b_c, b_o, then
// W_y, b_y.
std::vector<num::Vector*> tensor_list(ModelParams& p);
std::vector<const num::Vector*> tensor_list(const ModelParams& p);
std::vector<num::Vector*> tensor_list(Gradients& g);
std::vector<const num::Vector*> tensor_list(const Gradients& g);
std::vector<std::string> tensor_names(const ModelParams& p);

// --- forward ----------------------------------------------------------------

// [onehot(char_index) ; aux], the per-step input vector.
num::Vector context_encode(std::size_t char_index,
                           const corpus::RatingVector& aux,
                           std::size_t vocab_size);

// One LSTM cell update:
//   z = [x ; prev_h]
//   f = sigmoid(W_f z + b_f),  i = sigmoid(W_i z + b_i)
//   c' = tanh(W_c z + b_c),    c = f*prev_c + i*c'
//   o = sigmoid(W_o z + b_o),  h = o*tanh(c)
struct CellOutput {
  num::Vector c;
  num::Vector h;
};
CellOutput lstm_cell_step(const LayerParams& params, const num::Vector& x,
                          const num::Vector& prev_c, const num::Vector& prev_h);

// Plain tanh recurrence h = tanh(W_x x + W_h prev_h); baseline cell kept for
// reference and tests.
num::Vector rnn_cell_step(const num::Matrix& w_x, const num::Matrix& w_h,
                          const num::Vector& x, const num::Vector& prev_h);

// Runs the stacked LSTM over a sequence of encoded inputs, producing per-step
// logits plus the cache backward_bptt consumes. The overload with keep_prob
// applies inverted dropout between layers (training only).
ForwardResult forward_sequence(const ModelParams& params,
                               const std::vector<num::Vector>& inputs,
                               const LstmState& init);
ForwardResult forward_sequence(const ModelParams& params,
                               const std::vector<num::Vector>& inputs,
                               const LstmState& init, double keep_prob,
                               Prng& dropout_rng);

// Single generation step: threads the state in place and returns the logits.
num::Vector step_logits(const ModelParams& params, const num::Vector& x,
                        LstmState& state);

// Mean cross-entropy over the step softmax distributions.
double sequence_loss(const std::vector<num::Vector>& logits,
                     const std::vector<std::uint32_t>& targets);

// --- backward ---------------------------------------------------------------

// Exact gradient of sequence_loss via backpropagation through time. The cache
// must come from the matching forward_sequence call; the initial state is
// treated as constant (truncated BPTT).
Gradients backward_bptt(const ModelParams& params, const ForwardCache& cache,
                        const std::vector<std::uint32_t>& targets);

// --- gradient algebra and optimizer ------------------------------------------

void accumulate(Gradients& acc, const Gradients& g);
void scale(Gradients& g, double factor);
double global_norm(const Gradients& g);

// Scales all gradients by max_norm/norm when the global norm exceeds
// max_norm; returns the pre-clip norm.
double clip_by_global_norm(Gradients& g, double max_norm);

// Bias-corrected adaptive-moment update; increments opt.step.
void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& opt,
               double lr, const AdamConfig& cfg = {});

// Inverted-dropout mask: entries are 0 or 1/keep_prob.
num::Vector dropout_mask(Prng& rng, std::size_t width, double keep_prob);

// --- checkpointing ----------------------------------------------------------

struct Checkpoint {
  ModelParams params;
  std::optional<OptimizerState> optimizer;
};

// Little-endian binary format: magic, format version, dimensions, vocabulary,
// flat f64 tensors in tensor_list order, optional optimizer state, CRC-32.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const OptimizerState* opt = nullptr);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace revgen::model
