#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "revgen/error.hpp"
#include "revgen/model.hpp"

namespace revgen::model {

namespace {

constexpr char kMagic[8] = {'R', 'V', 'G', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t n = 0; n < 256; ++n) {
    std::uint32_t c = n;
    for (int k = 0; k < 8; ++k) {
      c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
    }
    table[n] = c;
  }
  return table;
}

std::uint32_t crc32(const std::string& bytes) {
  static const auto table = make_crc_table();
  std::uint32_t c = 0xFFFFFFFFu;
  for (unsigned char b : bytes) {
    c = table[(c ^ b) & 0xFFu] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

struct Writer {
  std::string out;

  void u8(std::uint8_t v) { out.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }
  void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
  void bytes(const char* p, std::size_t n) { out.append(p, n); }
  void tensor(const num::Vector& v) {
    for (double d : v) f64(d);
  }
};

struct Reader {
  const std::string& in;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > in.size()) {
      throw IntegrityError("checkpoint is truncated");
    }
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in[pos++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos++])) << (8 * i);
    }
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos++])) << (8 * i);
    }
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void tensor(num::Vector& v) {
    for (double& d : v) d = f64();
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const OptimizerState* opt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(params.hidden));
  w.u32(static_cast<std::uint32_t>(params.layers.size()));
  w.u32(static_cast<std::uint32_t>(params.aux_dim));
  const std::string& chars = params.vocab.chars();
  w.u32(static_cast<std::uint32_t>(chars.size()));
  w.bytes(chars.data(), chars.size());
  for (const auto* t : tensor_list(params)) w.tensor(*t);
  if (opt != nullptr) {
    const auto ps = tensor_list(params);
    if (opt->m.size() != ps.size() || opt->v.size() != ps.size()) {
      throw ShapeError("save_checkpoint: optimizer state does not match model");
    }
    w.u8(1);
    w.u64(opt->step);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (opt->m[i].size() != ps[i]->size() || opt->v[i].size() != ps[i]->size()) {
        throw ShapeError("save_checkpoint: optimizer tensor " +
                         std::to_string(i) + " does not match model");
      }
      w.tensor(opt->m[i]);
      w.tensor(opt->v[i]);
    }
  } else {
    w.u8(0);
  }
  w.u32(crc32(w.out));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(w.out.data(), static_cast<std::streamsize>(w.out.size()));
  f.flush();
  if (!f) throw IoError("failed writing checkpoint to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::string raw((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("failed reading checkpoint from '" + path + "'");

  // Header checks come before the checksum so a bad version is reported as a
  // version problem, not as corruption.
  if (raw.size() < sizeof(kMagic) + 4 + 4 ||
      std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IntegrityError("'" + path + "' is not a model checkpoint");
  }
  Reader header{raw, sizeof(kMagic)};
  const std::uint32_t version = header.u32();
  if (version != kVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) +
                       " is not supported (expected " +
                       std::to_string(kVersion) + ")");
  }
  const std::string body = raw.substr(0, raw.size() - 4);
  Reader crc_reader{raw, raw.size() - 4};
  if (crc32(body) != crc_reader.u32()) {
    throw IntegrityError("checkpoint checksum mismatch in '" + path + "'");
  }

  Reader r{body, header.pos};
  const std::uint32_t hidden = r.u32();
  const std::uint32_t n_layers = r.u32();
  const std::uint32_t aux_dim = r.u32();
  const std::uint32_t n_chars = r.u32();
  if (hidden == 0 || n_layers == 0) {
    throw IntegrityError("checkpoint declares an empty model");
  }
  r.need(n_chars);
  const std::string chars = body.substr(r.pos, n_chars);
  r.pos += n_chars;

  Checkpoint ck;
  ck.params.vocab = corpus::Vocabulary(chars);
  ck.params.hidden = hidden;
  ck.params.aux_dim = aux_dim;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    const std::size_t in_w = (l == 0) ? ck.params.input_width() : hidden;
    const std::size_t z_len = in_w + hidden;
    LayerParams lp;
    lp.w_f = num::Matrix(hidden, z_len);
    lp.w_i = num::Matrix(hidden, z_len);
    lp.w_c = num::Matrix(hidden, z_len);
    lp.w_o = num::Matrix(hidden, z_len);
    lp.b_f = num::Vector(hidden, 0.0);
    lp.b_i = num::Vector(hidden, 0.0);
    lp.b_c = num::Vector(hidden, 0.0);
    lp.b_o = num::Vector(hidden, 0.0);
    ck.params.layers.push_back(std::move(lp));
  }
  ck.params.w_y = num::Matrix(ck.params.vocab.size(), hidden);
  ck.params.b_y = num::Vector(ck.params.vocab.size(), 0.0);
  for (auto* t : tensor_list(ck.params)) r.tensor(*t);

  const std::uint8_t has_opt = r.u8();
  if (has_opt == 1) {
    OptimizerState opt;
    opt.step = r.u64();
    for (const auto* t : tensor_list(ck.params)) {
      num::Vector m(t->size()), v(t->size());
      r.tensor(m);
      r.tensor(v);
      opt.m.push_back(std::move(m));
      opt.v.push_back(std::move(v));
    }
    ck.optimizer = std::move(opt);
  } else if (has_opt != 0) {
    throw IntegrityError("checkpoint has an invalid optimizer flag");
  }
  if (r.pos != body.size()) {
    throw IntegrityError("checkpoint has trailing bytes");
  }
  return ck;
}

}  // namespace revgen::model
