#include "revgen/model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "revgen/error.hpp"

namespace revgen::model {

namespace {

using num::Matrix;
using num::Vector;

void affine_into(const Matrix& w, const Vector& b, std::span<const double> z,
                 Vector& out) {
  out = b;
  num::matvec_add(w, z, out);
}

void sigmoid_inplace(Vector& v) {
  for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
}

void tanh_inplace(Vector& v) {
  for (double& x : v) x = std::tanh(x);
}

void check_layer_shapes(const LayerParams& lp, std::size_t x_len,
                        std::size_t hidden) {
  const std::size_t z_len = x_len + hidden;
  const auto check = [&](const Matrix& w, const Vector& b, const char* gate) {
    if (w.rows != hidden || w.cols != z_len || b.size() != hidden) {
      throw ShapeError(std::string("lstm_cell_step: gate ") + gate + " is " +
                       std::to_string(w.rows) + "x" + std::to_string(w.cols) +
                       " with bias " + std::to_string(b.size()) +
                       ", expected " + std::to_string(hidden) + "x" +
                       std::to_string(z_len));
    }
  };
  check(lp.w_f, lp.b_f, "f");
  check(lp.w_i, lp.b_i, "i");
  check(lp.w_c, lp.b_c, "c");
  check(lp.w_o, lp.b_o, "o");
}

// Shared cell update. Both the public single-step op and the sequence forward
// run through here, so chained single steps reproduce a sequence run exactly.
void cell_forward(const LayerParams& lp, std::span<const double> x,
                  const Vector& prev_c, const Vector& prev_h,
                  StepLayerCache& out) {
  const std::size_t hidden = prev_h.size();
  check_layer_shapes(lp, x.size(), hidden);
  if (prev_c.size() != hidden) {
    throw ShapeError("lstm_cell_step: prev_c has length " +
                     std::to_string(prev_c.size()) + ", expected " +
                     std::to_string(hidden));
  }

  out.z.resize(x.size() + hidden);
  std::copy(x.begin(), x.end(), out.z.begin());
  std::copy(prev_h.begin(), prev_h.end(), out.z.begin() + x.size());

  affine_into(lp.w_f, lp.b_f, out.z, out.f);
  sigmoid_inplace(out.f);
  affine_into(lp.w_i, lp.b_i, out.z, out.i);
  sigmoid_inplace(out.i);
  affine_into(lp.w_c, lp.b_c, out.z, out.g);
  tanh_inplace(out.g);
  affine_into(lp.w_o, lp.b_o, out.z, out.o);
  sigmoid_inplace(out.o);

  out.c.resize(hidden);
  out.tc.resize(hidden);
  out.h.resize(hidden);
  for (std::size_t k = 0; k < hidden; ++k) {
    out.c[k] = out.f[k] * prev_c[k] + out.i[k] * out.g[k];
    out.tc[k] = std::tanh(out.c[k]);
    out.h[k] = out.o[k] * out.tc[k];
  }
}

void check_state(const ModelParams& params, const LstmState& state) {
  if (state.c.size() != params.layers.size() ||
      state.h.size() != params.layers.size()) {
    throw ShapeError("state has " + std::to_string(state.c.size()) +
                     " layers, model has " +
                     std::to_string(params.layers.size()));
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (state.c[l].size() != params.hidden || state.h[l].size() != params.hidden) {
      throw ShapeError("state layer " + std::to_string(l) +
                       " width does not match hidden size " +
                       std::to_string(params.hidden));
    }
  }
}

ForwardResult forward_impl(const ModelParams& params,
                           const std::vector<Vector>& inputs,
                           const LstmState& init, double keep_prob,
                           Prng* dropout_rng) {
  check_state(params, init);
  const std::size_t n_layers = params.layers.size();
  const std::size_t width = params.input_width();
  if (params.w_y.rows != params.vocab.size() || params.w_y.cols != params.hidden ||
      params.b_y.size() != params.vocab.size()) {
    throw ShapeError("output projection is " + std::to_string(params.w_y.rows) +
                     "x" + std::to_string(params.w_y.cols) + ", expected " +
                     std::to_string(params.vocab.size()) + "x" +
                     std::to_string(params.hidden));
  }

  ForwardResult res;
  res.cache.input_width = width;
  res.cache.hidden = params.hidden;
  res.cache.steps.resize(inputs.size());
  res.logits.resize(inputs.size());
  res.final_state = init;

  Vector masked;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (inputs[t].size() != width) {
      throw ShapeError("input step " + std::to_string(t) + " has width " +
                       std::to_string(inputs[t].size()) + ", expected " +
                       std::to_string(width));
    }
    auto& step = res.cache.steps[t];
    step.resize(n_layers);
    std::span<const double> layer_in(inputs[t]);
    for (std::size_t l = 0; l < n_layers; ++l) {
      StepLayerCache& slc = step[l];
      slc.c_prev = res.final_state.c[l];
      cell_forward(params.layers[l], layer_in, res.final_state.c[l],
                   res.final_state.h[l], slc);
      res.final_state.c[l] = slc.c;
      res.final_state.h[l] = slc.h;
      if (l + 1 < n_layers) {
        if (keep_prob < 1.0) {
          slc.mask = dropout_mask(*dropout_rng, params.hidden, keep_prob);
          masked.resize(params.hidden);
          for (std::size_t k = 0; k < params.hidden; ++k) {
            masked[k] = slc.h[k] * slc.mask[k];
          }
          layer_in = masked;
        } else {
          layer_in = slc.h;
        }
      }
    }
    affine_into(params.w_y, params.b_y, step.back().h, res.logits[t]);
  }
  return res;
}

void check_cache(const ModelParams& params, const ForwardCache& cache,
                 std::size_t n_targets) {
  if (cache.steps.empty() || cache.steps.size() != n_targets) {
    throw ValidationError("backward_bptt: cache has " +
                          std::to_string(cache.steps.size()) +
                          " steps but there are " + std::to_string(n_targets) +
                          " targets");
  }
  if (cache.input_width != params.input_width() || cache.hidden != params.hidden) {
    throw ValidationError("backward_bptt: cache was built for a different model");
  }
  for (const auto& step : cache.steps) {
    if (step.size() != params.layers.size()) {
      throw ValidationError("backward_bptt: cache layer count mismatch");
    }
  }
}

}  // namespace

ModelParams init_params(const corpus::Vocabulary& vocab, std::size_t hidden,
                        std::size_t n_layers, Prng& rng, std::size_t aux_dim) {
  if (hidden < 1 || n_layers < 1) {
    throw ValidationError("init_params: hidden and n_layers must be >= 1");
  }
  ModelParams p;
  p.vocab = vocab;
  p.aux_dim = aux_dim;
  p.hidden = hidden;

  const auto fill_uniform = [&rng](Matrix& m, double s) {
    for (double& x : m.data) x = rng.next_uniform(-s, s);
  };
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t in_w = (l == 0) ? p.input_width() : hidden;
    const std::size_t z_len = in_w + hidden;
    const double s = 1.0 / std::sqrt(static_cast<double>(z_len));
    LayerParams lp;
    lp.w_f = Matrix(hidden, z_len);
    lp.w_i = Matrix(hidden, z_len);
    lp.w_c = Matrix(hidden, z_len);
    lp.w_o = Matrix(hidden, z_len);
    fill_uniform(lp.w_f, s);
    fill_uniform(lp.w_i, s);
    fill_uniform(lp.w_c, s);
    fill_uniform(lp.w_o, s);
    lp.b_f = Vector(hidden, 1.0);  // keeps the forget gate open early on
    lp.b_i = Vector(hidden, 0.0);
    lp.b_c = Vector(hidden, 0.0);
    lp.b_o = Vector(hidden, 0.0);
    p.layers.push_back(std::move(lp));
  }
  p.w_y = Matrix(vocab.size(), hidden);
  fill_uniform(p.w_y, 1.0 / std::sqrt(static_cast<double>(hidden)));
  p.b_y = Vector(vocab.size(), 0.0);
  return p;
}

LstmState zero_state(const ModelParams& params) {
  LstmState s;
  s.c.assign(params.layers.size(), Vector(params.hidden, 0.0));
  s.h.assign(params.layers.size(), Vector(params.hidden, 0.0));
  return s;
}

Gradients zero_gradients(const ModelParams& params) {
  Gradients g;
  for (const auto& lp : params.layers) {
    LayerParams zl;
    zl.w_f = Matrix(lp.w_f.rows, lp.w_f.cols);
    zl.w_i = Matrix(lp.w_i.rows, lp.w_i.cols);
    zl.w_c = Matrix(lp.w_c.rows, lp.w_c.cols);
    zl.w_o = Matrix(lp.w_o.rows, lp.w_o.cols);
    zl.b_f = Vector(lp.b_f.size(), 0.0);
    zl.b_i = Vector(lp.b_i.size(), 0.0);
    zl.b_c = Vector(lp.b_c.size(), 0.0);
    zl.b_o = Vector(lp.b_o.size(), 0.0);
    g.layers.push_back(std::move(zl));
  }
  g.w_y = Matrix(params.w_y.rows, params.w_y.cols);
  g.b_y = Vector(params.b_y.size(), 0.0);
  return g;
}

OptimizerState init_optimizer(const ModelParams& params) {
  OptimizerState opt;
  for (const auto* t : tensor_list(params)) {
    opt.m.emplace_back(t->size(), 0.0);
    opt.v.emplace_back(t->size(), 0.0);
  }
  return opt;
}

namespace {

template <typename Layers, typename WY, typename BY, typename Out>
std::vector<Out> tensor_list_impl(Layers& layers, WY& w_y, BY& b_y) {
  std::vector<Out> out;
  out.reserve(layers.size() * 8 + 2);
  for (auto& lp : layers) {
    out.push_back(&lp.w_f.data);
    out.push_back(&lp.w_i.data);
    out.push_back(&lp.w_c.data);
    out.push_back(&lp.w_o.data);
    out.push_back(&lp.b_f);
    out.push_back(&lp.b_i);
    out.push_back(&lp.b_c);
    out.push_back(&lp.b_o);
  }
  out.push_back(&w_y.data);
  out.push_back(&b_y);
  return out;
}

}  // namespace

std::vector<Vector*> tensor_list(ModelParams& p) {
  return tensor_list_impl<decltype(p.layers), Matrix, Vector, Vector*>(
      p.layers, p.w_y, p.b_y);
}
std::vector<const Vector*> tensor_list(const ModelParams& p) {
  return tensor_list_impl<const decltype(p.layers), const Matrix, const Vector,
                          const Vector*>(p.layers, p.w_y, p.b_y);
}
std::vector<Vector*> tensor_list(Gradients& g) {
  return tensor_list_impl<decltype(g.layers), Matrix, Vector, Vector*>(
      g.layers, g.w_y, g.b_y);
}
std::vector<const Vector*> tensor_list(const Gradients& g) {
  return tensor_list_impl<const decltype(g.layers), const Matrix, const Vector,
                          const Vector*>(g.layers, g.w_y, g.b_y);
}

std::vector<std::string> tensor_names(const ModelParams& p) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (const char* t : {"w_f", "w_i", "w_c", "w_o", "b_f", "b_i", "b_c", "b_o"}) {
      names.push_back(prefix + t);
    }
  }
  names.push_back("w_y");
  names.push_back("b_y");
  return names;
}

num::Vector context_encode(std::size_t char_index,
                           const corpus::RatingVector& aux,
                           std::size_t vocab_size) {
  if (char_index >= vocab_size) {
    throw IndexError("context_encode: index " + std::to_string(char_index) +
                     " out of range for vocabulary of " +
                     std::to_string(vocab_size));
  }
  if (!aux.in_unit_range()) {
    throw ValidationError("context_encode: aux components must lie in [0, 1]");
  }
  Vector v(vocab_size + corpus::RatingVector::kFeatures, 0.0);
  v[char_index] = 1.0;
  const auto a = aux.values();
  std::copy(a.begin(), a.end(), v.begin() + vocab_size);
  return v;
}

CellOutput lstm_cell_step(const LayerParams& params, const Vector& x,
                          const Vector& prev_c, const Vector& prev_h) {
  StepLayerCache scratch;
  cell_forward(params, x, prev_c, prev_h, scratch);
  return {std::move(scratch.c), std::move(scratch.h)};
}

num::Vector rnn_cell_step(const Matrix& w_x, const Matrix& w_h, const Vector& x,
                          const Vector& prev_h) {
  if (w_x.cols != x.size() || w_h.cols != prev_h.size() || w_x.rows != w_h.rows) {
    throw ShapeError("rnn_cell_step: W_x is " + std::to_string(w_x.rows) + "x" +
                     std::to_string(w_x.cols) + ", W_h is " +
                     std::to_string(w_h.rows) + "x" + std::to_string(w_h.cols) +
                     ", x has " + std::to_string(x.size()) + ", h has " +
                     std::to_string(prev_h.size()));
  }
  Vector h(w_x.rows, 0.0);
  num::matvec_add(w_x, x, h);
  num::matvec_add(w_h, prev_h, h);
  tanh_inplace(h);
  return h;
}

ForwardResult forward_sequence(const ModelParams& params,
                               const std::vector<Vector>& inputs,
                               const LstmState& init) {
  return forward_impl(params, inputs, init, 1.0, nullptr);
}

ForwardResult forward_sequence(const ModelParams& params,
                               const std::vector<Vector>& inputs,
                               const LstmState& init, double keep_prob,
                               Prng& dropout_rng) {
  if (keep_prob <= 0.0 || keep_prob > 1.0) {
    throw ValidationError("forward_sequence: keep_prob must be in (0, 1]");
  }
  return forward_impl(params, inputs, init, keep_prob, &dropout_rng);
}

num::Vector step_logits(const ModelParams& params, const Vector& x,
                        LstmState& state) {
  check_state(params, state);
  StepLayerCache scratch;
  std::span<const double> layer_in(x);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    cell_forward(params.layers[l], layer_in, state.c[l], state.h[l], scratch);
    state.c[l] = std::move(scratch.c);
    state.h[l] = std::move(scratch.h);
    scratch.c.clear();
    scratch.h.clear();
    layer_in = state.h[l];
  }
  Vector logits;
  affine_into(params.w_y, params.b_y, state.h.back(), logits);
  return logits;
}

double sequence_loss(const std::vector<Vector>& logits,
                     const std::vector<std::uint32_t>& targets) {
  if (logits.size() != targets.size()) {
    throw ShapeError("sequence_loss: " + std::to_string(logits.size()) +
                     " logit steps vs " + std::to_string(targets.size()) +
                     " targets");
  }
  if (logits.empty()) throw ShapeError("sequence_loss: empty sequence");
  double total = 0.0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    total += num::cross_entropy(num::softmax(logits[t]), targets[t]);
  }
  return total / static_cast<double>(logits.size());
}

Gradients backward_bptt(const ModelParams& params, const ForwardCache& cache,
                        const std::vector<std::uint32_t>& targets) {
  check_cache(params, cache, targets.size());
  const std::size_t T = targets.size();
  const std::size_t n_layers = params.layers.size();
  const std::size_t hidden = params.hidden;
  const double inv_t = 1.0 / static_cast<double>(T);

  Gradients grads = zero_gradients(params);

  std::vector<Vector> dh_next(n_layers, Vector(hidden, 0.0));
  std::vector<Vector> dc_next(n_layers, Vector(hidden, 0.0));
  std::vector<Vector> dz(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    dz[l].resize(cache.steps[0][l].z.size());
  }

  Vector dh_top(hidden);
  Vector dh_total(hidden), dc_total(hidden);
  Vector da_f(hidden), da_i(hidden), da_c(hidden), da_o(hidden);
  Vector dx_down;
  Vector logits, probs;

  for (std::size_t t = T; t-- > 0;) {
    const auto& step = cache.steps[t];
    const Vector& h_top = step.back().h;

    affine_into(params.w_y, params.b_y, h_top, logits);
    probs = num::softmax(logits);
    if (targets[t] >= probs.size()) {
      throw IndexError("backward_bptt: target " + std::to_string(targets[t]) +
                       " out of range at step " + std::to_string(t));
    }
    probs[targets[t]] -= 1.0;
    for (double& x : probs) x *= inv_t;  // dloss/dlogits

    num::outer_add(grads.w_y, probs, h_top);
    for (std::size_t k = 0; k < probs.size(); ++k) grads.b_y[k] += probs[k];
    std::fill(dh_top.begin(), dh_top.end(), 0.0);
    num::matvec_transpose_add(params.w_y, probs, dh_top);

    for (std::size_t l = n_layers; l-- > 0;) {
      const StepLayerCache& slc = step[l];
      LayerParams& g = grads.layers[l];
      const LayerParams& lp = params.layers[l];

      // Total gradient reaching this layer's hidden output.
      if (l == n_layers - 1) {
        for (std::size_t k = 0; k < hidden; ++k) {
          dh_total[k] = dh_top[k] + dh_next[l][k];
        }
      } else if (!slc.mask.empty()) {
        for (std::size_t k = 0; k < hidden; ++k) {
          dh_total[k] = dx_down[k] * slc.mask[k] + dh_next[l][k];
        }
      } else {
        for (std::size_t k = 0; k < hidden; ++k) {
          dh_total[k] = dx_down[k] + dh_next[l][k];
        }
      }

      for (std::size_t k = 0; k < hidden; ++k) {
        const double dtc = dh_total[k] * slc.o[k];
        dc_total[k] = dtc * (1.0 - slc.tc[k] * slc.tc[k]) + dc_next[l][k];
        const double d_o = dh_total[k] * slc.tc[k];
        da_o[k] = d_o * slc.o[k] * (1.0 - slc.o[k]);
        const double d_f = dc_total[k] * slc.c_prev[k];
        da_f[k] = d_f * slc.f[k] * (1.0 - slc.f[k]);
        const double d_i = dc_total[k] * slc.g[k];
        da_i[k] = d_i * slc.i[k] * (1.0 - slc.i[k]);
        const double d_g = dc_total[k] * slc.i[k];
        da_c[k] = d_g * (1.0 - slc.g[k] * slc.g[k]);
        dc_next[l][k] = dc_total[k] * slc.f[k];
      }

      std::fill(dz[l].begin(), dz[l].end(), 0.0);
      num::matvec_transpose_add(lp.w_f, da_f, dz[l]);
      num::matvec_transpose_add(lp.w_i, da_i, dz[l]);
      num::matvec_transpose_add(lp.w_c, da_c, dz[l]);
      num::matvec_transpose_add(lp.w_o, da_o, dz[l]);

      num::outer_add(g.w_f, da_f, slc.z);
      num::outer_add(g.w_i, da_i, slc.z);
      num::outer_add(g.w_c, da_c, slc.z);
      num::outer_add(g.w_o, da_o, slc.z);
      for (std::size_t k = 0; k < hidden; ++k) {
        g.b_f[k] += da_f[k];
        g.b_i[k] += da_i[k];
        g.b_c[k] += da_c[k];
        g.b_o[k] += da_o[k];
      }

      const std::size_t in_w = slc.z.size() - hidden;
      dx_down.assign(dz[l].begin(), dz[l].begin() + in_w);
      std::copy(dz[l].begin() + in_w, dz[l].end(), dh_next[l].begin());
    }
  }
  return grads;
}

void accumulate(Gradients& acc, const Gradients& g) {
  auto dst = tensor_list(acc);
  auto src = tensor_list(g);
  if (dst.size() != src.size()) {
    throw ShapeError("accumulate: gradient tensor counts differ");
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->size() != src[i]->size()) {
      throw ShapeError("accumulate: gradient tensor sizes differ");
    }
    for (std::size_t k = 0; k < dst[i]->size(); ++k) {
      (*dst[i])[k] += (*src[i])[k];
    }
  }
}

void scale(Gradients& g, double factor) {
  for (auto* t : tensor_list(g)) {
    for (double& x : *t) x *= factor;
  }
}

double global_norm(const Gradients& g) {
  double sum_sq = 0.0;
  for (const auto* t : tensor_list(g)) {
    for (double x : *t) sum_sq += x * x;
  }
  return std::sqrt(sum_sq);
}

double clip_by_global_norm(Gradients& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm > max_norm && norm > 0.0) {
    scale(g, max_norm / norm);
  }
  return norm;
}

void adam_step(ModelParams& params, const Gradients& grads, OptimizerState& opt,
               double lr, const AdamConfig& cfg) {
  auto ps = tensor_list(params);
  auto gs = tensor_list(grads);
  if (ps.size() != gs.size() || ps.size() != opt.m.size() ||
      ps.size() != opt.v.size()) {
    throw ShapeError("adam_step: tensor counts do not match");
  }
  opt.step += 1;
  const double corr1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
  const double corr2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Vector& p = *ps[i];
    const Vector& g = *gs[i];
    Vector& m = opt.m[i];
    Vector& v = opt.v[i];
    if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
      throw ShapeError("adam_step: tensor " + std::to_string(i) +
                       " sizes do not match");
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
      p[k] -= lr * (m[k] / corr1) / (std::sqrt(v[k] / corr2) + cfg.epsilon);
    }
  }
}

num::Vector dropout_mask(Prng& rng, std::size_t width, double keep_prob) {
  if (keep_prob <= 0.0 || keep_prob > 1.0) {
    throw ValidationError("dropout_mask: keep_prob must be in (0, 1]");
  }
  Vector mask(width);
  const double inv = 1.0 / keep_prob;
  for (double& x : mask) {
    x = rng.next_double() < keep_prob ? inv : 0.0;
  }
  return mask;
}

}  // namespace revgen::model
