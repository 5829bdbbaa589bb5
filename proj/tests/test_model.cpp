#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "revgen/corpus.hpp"
#include "revgen/error.hpp"
#include "revgen/model.hpp"
#include "revgen/prng.hpp"

using namespace revgen;
using num::Matrix;
using num::Vector;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

model::ModelParams small_params(std::uint64_t seed, std::size_t hidden = 5,
                                std::size_t layers = 2,
                                const std::string& chars = "abcdef") {
  Prng rng(seed);
  return model::init_params(corpus::Vocabulary(chars), hidden, layers, rng);
}

corpus::RatingVector mid_aux() {
  return corpus::RatingVector::from_values({0.1, 0.3, 0.5, 0.7, 0.9});
}

// Random but reproducible input sequence over the model's vocabulary.
std::vector<Vector> random_inputs(const model::ModelParams& p, std::size_t T,
                                  std::uint64_t seed,
                                  std::vector<std::uint32_t>* targets) {
  Prng rng(seed);
  std::vector<Vector> inputs;
  for (std::size_t t = 0; t < T; ++t) {
    const auto idx = static_cast<std::size_t>(rng.next_u64() % p.vocab.size());
    inputs.push_back(model::context_encode(idx, mid_aux(), p.vocab.size()));
    if (targets != nullptr) {
      targets->push_back(
          static_cast<std::uint32_t>(rng.next_u64() % p.vocab.size()));
    }
  }
  return inputs;
}

}  // namespace

TEST_CASE("single-unit cell update matches the hand-computed trace") {
  // One hidden unit, one input: every gate is a scalar sigmoid/tanh whose
  // value was worked out independently with 17 significant digits.
  model::LayerParams lp;
  lp.w_f = Matrix(1, 2);
  lp.w_f.data = {0.5, -0.25};
  lp.w_i = Matrix(1, 2);
  lp.w_i.data = {-0.3, 0.4};
  lp.w_c = Matrix(1, 2);
  lp.w_c.data = {0.7, 0.2};
  lp.w_o = Matrix(1, 2);
  lp.w_o.data = {0.6, -0.5};
  lp.b_f = {0.1};
  lp.b_i = {-0.2};
  lp.b_c = {0.05};
  lp.b_o = {0.0};

  const auto out = model::lstm_cell_step(lp, {0.8}, {0.3}, {-0.1});
  CHECK(out.c[0] == doctest::Approx(0.39104857861644793).epsilon(1e-14));
  CHECK(out.h[0] == doctest::Approx(0.23433380455096792).epsilon(1e-14));
}

TEST_CASE("plain tanh recurrence matches the hand-computed value") {
  Matrix w_x(1, 1), w_h(1, 1);
  w_x.data = {0.9};
  w_h.data = {-0.4};
  const auto h = model::rnn_cell_step(w_x, w_h, {0.5}, {0.2});
  CHECK(h[0] == doctest::Approx(0.35399171247704597).epsilon(1e-14));
}

TEST_CASE("cell step rejects mismatched shapes") {
  model::LayerParams lp;
  lp.w_f = lp.w_i = lp.w_c = lp.w_o = Matrix(1, 2);
  lp.b_f = lp.b_i = lp.b_c = lp.b_o = {0.0};
  CHECK_THROWS_AS(model::lstm_cell_step(lp, {0.8, 0.1}, {0.3}, {-0.1}),
                  ShapeError);
  CHECK_THROWS_AS(model::lstm_cell_step(lp, {0.8}, {0.3, 0.1}, {-0.1}),
                  ShapeError);
}

TEST_CASE("init_params sets forget biases to one and bounds the weights") {
  const auto p = small_params(11, 6, 2, "abcd");
  REQUIRE(p.layers.size() == 2);
  for (const auto& lp : p.layers) {
    for (double b : lp.b_f) CHECK(b == 1.0);
    for (double b : lp.b_i) CHECK(b == 0.0);
    for (double b : lp.b_c) CHECK(b == 0.0);
    for (double b : lp.b_o) CHECK(b == 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(lp.w_f.cols));
    for (double w : lp.w_f.data) {
      CHECK(w >= -bound);
      CHECK(w < bound);
    }
  }
  for (double b : p.b_y) CHECK(b == 0.0);

  // reproducible per seed, different across seeds
  const auto q = small_params(11, 6, 2, "abcd");
  const auto r = small_params(12, 6, 2, "abcd");
  CHECK(p.layers[0].w_f.data == q.layers[0].w_f.data);
  CHECK(p.layers[0].w_f.data != r.layers[0].w_f.data);
}

TEST_CASE("tensor walker covers eight tensors per layer plus the projection") {
  auto p = small_params(3, 4, 3);
  const auto tensors = model::tensor_list(p);
  const auto names = model::tensor_names(p);
  REQUIRE(tensors.size() == 3 * 8 + 2);
  REQUIRE(names.size() == tensors.size());
  CHECK(names.front() == "layer0.w_f");
  CHECK(names[8] == "layer1.w_f");
  CHECK(names[names.size() - 2] == "w_y");
  CHECK(names.back() == "b_y");
  // mutating through the walker hits the real storage
  (*tensors[0])[0] = 42.0;
  CHECK(p.layers[0].w_f.data[0] == 42.0);
}

TEST_CASE("context_encode lays out one-hot then ratings") {
  const auto v = model::context_encode(2, mid_aux(), 6);
  REQUIRE(v.size() == 11);
  CHECK(v[2] == 1.0);
  CHECK(v[0] == 0.0);
  CHECK(v[6] == 0.1);
  CHECK(v[10] == 0.9);
  CHECK_THROWS_AS(model::context_encode(6, mid_aux(), 6), IndexError);
  CHECK_THROWS_AS(
      model::context_encode(0, corpus::RatingVector::from_values({2, 0, 0, 0, 0}), 6),
      ValidationError);
}

TEST_CASE("chained single steps equal one sequence run exactly") {
  const auto p = small_params(17, 7, 2);
  const auto inputs = random_inputs(p, 3, 5, nullptr);

  // manual two-layer chain
  auto state = model::zero_state(p);
  std::vector<Vector> manual_h;
  for (const auto& x : inputs) {
    Vector layer_in = x;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const auto out =
          model::lstm_cell_step(p.layers[l], layer_in, state.c[l], state.h[l]);
      state.c[l] = out.c;
      state.h[l] = out.h;
      layer_in = out.h;
    }
    manual_h.push_back(state.h.back());
  }

  const auto fwd = model::forward_sequence(p, inputs, model::zero_state(p));
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t k = 0; k < p.hidden; ++k) {
      // same code path, so bit-for-bit equality is required
      CHECK(fwd.cache.steps[t].back().h[k] == manual_h[t][k]);
    }
  }
  for (std::size_t k = 0; k < p.hidden; ++k) {
    CHECK(fwd.final_state.h.back()[k] == state.h.back()[k]);
    CHECK(fwd.final_state.c.back()[k] == state.c.back()[k]);
  }
}

TEST_CASE("step_logits threads state exactly like the sequence forward") {
  const auto p = small_params(23, 6, 2);
  const auto inputs = random_inputs(p, 4, 9, nullptr);
  const auto fwd = model::forward_sequence(p, inputs, model::zero_state(p));

  auto state = model::zero_state(p);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto logits = model::step_logits(p, inputs[t], state);
    for (std::size_t k = 0; k < logits.size(); ++k) {
      CHECK(logits[k] == fwd.logits[t][k]);
    }
  }
}

TEST_CASE("forward rejects inputs of the wrong width") {
  const auto p = small_params(3);
  std::vector<Vector> inputs = {Vector(3, 0.0)};
  CHECK_THROWS_AS(model::forward_sequence(p, inputs, model::zero_state(p)),
                  ShapeError);
}

TEST_CASE("zeroed projection gives a uniform distribution loss") {
  auto p = small_params(29, 8, 2, "abcdefgh");  // vocab size 10
  std::fill(p.w_y.data.begin(), p.w_y.data.end(), 0.0);
  std::fill(p.b_y.begin(), p.b_y.end(), 0.0);

  std::vector<std::uint32_t> targets;
  const auto inputs = random_inputs(p, 40, 31, &targets);
  const auto fwd = model::forward_sequence(p, inputs, model::zero_state(p));
  const double loss = model::sequence_loss(fwd.logits, targets);
  CHECK(std::abs(loss - std::log(10.0)) < 1e-12);
}

TEST_CASE("sequence_loss validates lengths") {
  CHECK_THROWS_AS(model::sequence_loss({}, {}), ShapeError);
  CHECK_THROWS_AS(model::sequence_loss({Vector{1.0, 2.0}}, {0, 1}), ShapeError);
}

TEST_CASE("analytic gradients match central finite differences") {
  auto p = small_params(37, 5, 2, "abcdef");  // deliberately small but stacked
  std::vector<std::uint32_t> targets;
  const auto inputs = random_inputs(p, 7, 41, &targets);

  const auto fwd = model::forward_sequence(p, inputs, model::zero_state(p));
  const auto grads = model::backward_bptt(p, fwd.cache, targets);

  // 1e-4 relative with a 1e-8 absolute floor: the floor absorbs the
  // cancellation noise of the difference quotient (about 1e-11 here), which
  // otherwise dominates the relative error of near-zero gradients.
  const double eps = 1e-5;
  auto tensors = model::tensor_list(p);
  const auto grad_tensors = model::tensor_list(grads);
  double worst = 0.0;  // error as a fraction of its allowance
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    for (std::size_t k = 0; k < tensors[i]->size(); ++k) {
      double& w = (*tensors[i])[k];
      const double saved = w;
      w = saved + eps;
      const auto up = model::forward_sequence(p, inputs, model::zero_state(p));
      const double lu = model::sequence_loss(up.logits, targets);
      w = saved - eps;
      const auto dn = model::forward_sequence(p, inputs, model::zero_state(p));
      const double ld = model::sequence_loss(dn.logits, targets);
      w = saved;

      const double numeric = (lu - ld) / (2.0 * eps);
      const double analytic = (*grad_tensors[i])[k];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      const double allowance = 1e-8 + 1e-4 * scale;
      worst = std::max(worst, std::abs(numeric - analytic) / allowance);
    }
  }
  CHECK(worst <= 1.0);
}

TEST_CASE("gradients flow through inter-layer dropout masks") {
  auto p = small_params(43, 4, 2, "abc");
  std::vector<std::uint32_t> targets;
  const auto inputs = random_inputs(p, 5, 47, &targets);

  // Fixed masks via a fixed rng seed: run forward twice with the same seed to
  // get identical masks for the finite-difference passes.
  const auto run = [&](model::ModelParams& params) {
    Prng rng(1234);
    return model::forward_sequence(params, inputs, model::zero_state(params),
                                   0.6, rng);
  };
  const auto fwd = run(p);
  const auto grads = model::backward_bptt(p, fwd.cache, targets);

  const double eps = 1e-5;
  auto tensors = model::tensor_list(p);
  const auto grad_tensors = model::tensor_list(grads);
  double worst = 0.0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    for (std::size_t k = 0; k < tensors[i]->size(); k += 3) {
      double& w = (*tensors[i])[k];
      const double saved = w;
      w = saved + eps;
      const auto up = run(p);
      const double lu = model::sequence_loss(up.logits, targets);
      w = saved - eps;
      const auto dn = run(p);
      const double ld = model::sequence_loss(dn.logits, targets);
      w = saved;

      const double numeric = (lu - ld) / (2.0 * eps);
      const double analytic = (*grad_tensors[i])[k];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      worst = std::max(worst,
                       std::abs(numeric - analytic) / (1e-8 + 1e-4 * scale));
    }
  }
  CHECK(worst <= 1.0);
}

TEST_CASE("backward rejects a cache that does not match the targets") {
  const auto p = small_params(5);
  const auto inputs = random_inputs(p, 4, 3, nullptr);
  const auto fwd = model::forward_sequence(p, inputs, model::zero_state(p));
  const std::vector<std::uint32_t> wrong(3, 0);
  CHECK_THROWS_AS(model::backward_bptt(p, fwd.cache, wrong), ValidationError);
}

TEST_CASE("gradient algebra scales, accumulates and clips") {
  const auto p = small_params(7, 4, 1, "ab");
  auto a = model::zero_gradients(p);
  auto b = model::zero_gradients(p);
  (*model::tensor_list(a)[0])[0] = 3.0;
  (*model::tensor_list(b)[0])[0] = 1.0;
  (*model::tensor_list(b)[0])[1] = 4.0;

  model::accumulate(a, b);
  CHECK((*model::tensor_list(a)[0])[0] == 4.0);
  CHECK((*model::tensor_list(a)[0])[1] == 4.0);

  model::scale(a, 0.5);
  CHECK((*model::tensor_list(a)[0])[0] == 2.0);

  CHECK(model::global_norm(a) == doctest::Approx(std::sqrt(8.0)));

  SUBCASE("norm above the cap rescales") {
    const double pre = model::clip_by_global_norm(a, 1.0);
    CHECK(pre == doctest::Approx(std::sqrt(8.0)));
    CHECK(model::global_norm(a) == doctest::Approx(1.0));
  }
  SUBCASE("norm below the cap is untouched") {
    const double pre = model::clip_by_global_norm(a, 10.0);
    CHECK(pre == doctest::Approx(std::sqrt(8.0)));
    CHECK((*model::tensor_list(a)[0])[0] == 2.0);
  }
}

TEST_CASE("adam reproduces a hand-computed three-step trace") {
  // Scalar parameter starting at 1.0, gradients 0.5, -0.3, 0.2, lr 0.1.
  // Drive the full update but only feed a gradient into one entry; every
  // other weight keeps zero moments and never moves.
  auto params = small_params(1, 1, 1, "");
  auto grads = model::zero_gradients(params);
  auto opt = model::init_optimizer(params);
  double& w = (*model::tensor_list(params)[0])[0];
  double& g = (*model::tensor_list(grads)[0])[0];
  w = 1.0;

  const double expected[3] = {0.90000000199999997, 0.88085019894177519,
                              0.84610743079088202};
  const double steps[3] = {0.5, -0.3, 0.2};
  for (int s = 0; s < 3; ++s) {
    g = steps[s];
    model::adam_step(params, grads, opt, 0.1);
    CHECK(w == doctest::Approx(expected[s]).epsilon(1e-14));
  }
  CHECK(opt.step == 3);
}

TEST_CASE("adam's first step has magnitude close to the learning rate") {
  auto params = small_params(53, 4, 1, "abc");
  auto grads = model::zero_gradients(params);
  auto opt = model::init_optimizer(params);
  const double before = (*model::tensor_list(params)[0])[0];
  (*model::tensor_list(grads)[0])[0] = 0.7;
  model::adam_step(params, grads, opt, 0.01);
  const double after = (*model::tensor_list(params)[0])[0];
  CHECK(std::abs(before - after) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("dropout masks are inverted and sized to keep_prob") {
  Prng rng(61);
  const auto mask = model::dropout_mask(rng, 10000, 0.8);
  std::size_t kept = 0;
  for (double m : mask) {
    CHECK((m == 0.0 || m == doctest::Approx(1.25)));
    if (m != 0.0) ++kept;
  }
  CHECK(static_cast<double>(kept) / 10000.0 == doctest::Approx(0.8).epsilon(0.05));

  Prng rng2(61);
  const auto ones = model::dropout_mask(rng2, 16, 1.0);
  for (double m : ones) CHECK(m == 1.0);

  CHECK_THROWS_AS(model::dropout_mask(rng, 4, 0.0), ValidationError);
  CHECK_THROWS_AS(model::dropout_mask(rng, 4, 1.5), ValidationError);
}

TEST_CASE("checkpoints round trip bitwise with optimizer state") {
  const auto p = small_params(67, 6, 2, "abcdefg");
  auto opt = model::init_optimizer(p);
  opt.step = 41;
  Prng noise(5);
  for (auto& m : opt.m) {
    for (double& x : m) x = noise.next_uniform(-1, 1);
  }
  for (auto& v : opt.v) {
    for (double& x : v) x = noise.next_uniform(0, 1);
  }

  const std::string path = temp_path("revgen_ckpt_roundtrip.ckpt");
  model::save_checkpoint(path, p, &opt);
  const auto loaded = model::load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(loaded.params.vocab == p.vocab);
  CHECK(loaded.params.hidden == p.hidden);
  CHECK(loaded.params.aux_dim == p.aux_dim);
  const auto orig_t = model::tensor_list(p);
  const auto load_t = model::tensor_list(loaded.params);
  REQUIRE(orig_t.size() == load_t.size());
  for (std::size_t i = 0; i < orig_t.size(); ++i) {
    CHECK(*orig_t[i] == *load_t[i]);  // exact, not approximate
  }
  REQUIRE(loaded.optimizer.has_value());
  CHECK(loaded.optimizer->step == 41);
  CHECK(loaded.optimizer->m == opt.m);
  CHECK(loaded.optimizer->v == opt.v);
}

TEST_CASE("checkpoints without optimizer state load as params only") {
  const auto p = small_params(71, 4, 1, "ab");
  const std::string path = temp_path("revgen_ckpt_plain.ckpt");
  model::save_checkpoint(path, p, nullptr);
  const auto loaded = model::load_checkpoint(path);
  std::filesystem::remove(path);
  CHECK_FALSE(loaded.optimizer.has_value());
  CHECK(loaded.params.vocab == p.vocab);
}

TEST_CASE("checkpoint corruption is told apart from version skew") {
  const auto p = small_params(73, 4, 1, "abc");
  const std::string path = temp_path("revgen_ckpt_damage.ckpt");
  model::save_checkpoint(path, p, nullptr);

  std::ifstream in(path, std::ios::binary);
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  in.close();

  const auto rewrite = [&](std::string bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
  };

  SUBCASE("flipped version byte reports a version problem") {
    std::string bad = raw;
    bad[8] = 9;  // version field sits right after the 8-byte magic
    rewrite(bad);
    CHECK_THROWS_AS(model::load_checkpoint(path), VersionError);
  }
  SUBCASE("flipped payload byte reports corruption") {
    std::string bad = raw;
    bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 0x40);
    rewrite(bad);
    CHECK_THROWS_AS(model::load_checkpoint(path), IntegrityError);
  }
  SUBCASE("truncation reports corruption") {
    rewrite(raw.substr(0, raw.size() - 10));
    CHECK_THROWS_AS(model::load_checkpoint(path), IntegrityError);
  }
  SUBCASE("foreign file reports corruption") {
    rewrite("definitely not a checkpoint");
    CHECK_THROWS_AS(model::load_checkpoint(path), IntegrityError);
  }
  SUBCASE("missing file is an io error") {
    std::filesystem::remove(path);
    CHECK_THROWS_AS(model::load_checkpoint(path), IoError);
  }

  std::filesystem::remove(path);
}
