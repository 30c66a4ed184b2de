#include "ai2v/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace ai2v {

namespace {

constexpr std::uint8_t kFlagAdagrad = 0x1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b.data(), b.size());
  }
  void tensor(const Matrix<float>& m) {
    for (float x : m.flat()) u32(std::bit_cast<std::uint32_t>(x));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(void* p, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
    }
  }
  std::uint8_t u8(const char* what) {
    std::uint8_t v;
    bytes(&v, 1, what);
    return v;
  }
  std::uint32_t u32(const char* what) {
    std::array<unsigned char, 4> b{};
    bytes(b.data(), b.size(), what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  void tensor(Matrix<float>& m) {
    std::vector<unsigned char> raw(m.size() * 4);
    bytes(raw.data(), raw.size(), "tensor data");
    auto flat = m.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) {
      std::uint32_t v = 0;
      for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(raw[4 * i + k]) << (8 * k);
      flat[i] = std::bit_cast<float>(v);
    }
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after checkpoint data");
  }

 private:
  std::istream& in_;
};

void write_header(Writer& w, ModelKind kind, const ModelDims& dims, bool with_state) {
  w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(static_cast<std::uint32_t>(dims.items));
  w.u32(static_cast<std::uint32_t>(dims.dim));
  w.u32(static_cast<std::uint32_t>(dims.attn_dim));
  w.u32(static_cast<std::uint32_t>(dims.heads));
  w.u8(with_state ? kFlagAdagrad : 0);
}

template <typename Params>
void write_body(Writer& w, const Params& params, const AdagradState<Params>* state) {
  params.for_each_tensor([&](const Matrix<float>& m) { w.tensor(m); });
  if (state) state->accum.for_each_tensor([&](const Matrix<float>& m) { w.tensor(m); });
}

template <typename Params>
void read_body(Reader& r, Params& params, std::optional<AdagradState<Params>>& state, bool with_state,
               const Params& zeros) {
  params.for_each_tensor([&](Matrix<float>& m) { r.tensor(m); });
  if (with_state) {
    // Learning rate and epsilon are run settings, not stored.
    state = AdagradState<Params>{zeros, 0.1, 1e-10};
    state->accum.for_each_tensor([&](Matrix<float>& m) { r.tensor(m); });
  }
}

void check_output(std::ostream& out) {
  if (!out) throw CheckpointError("failed writing checkpoint");
}

}  // namespace

const char* model_kind_name(ModelKind kind) { return kind == ModelKind::kI2v ? "i2v" : "ai2v"; }

void write_checkpoint(std::ostream& out, const I2vParams& params, const AdagradState<I2vParams>* state) {
  Writer w(out);
  write_header(w, ModelKind::kI2v, {params.num_items(), params.dim(), 0, 0}, state != nullptr);
  write_body(w, params, state);
  check_output(out);
}

void write_checkpoint(std::ostream& out, const Ai2vParams& params, const AdagradState<Ai2vParams>* state) {
  Writer w(out);
  write_header(w, ModelKind::kAi2v, params.dims, state != nullptr);
  write_body(w, params, state);
  check_output(out);
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[8];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw CheckpointError("bad magic: not an AI2V checkpoint");
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind = r.u8("model kind");
  ModelDims dims;
  dims.items = r.u32("dims");
  dims.dim = r.u32("dims");
  dims.attn_dim = r.u32("dims");
  dims.heads = r.u32("dims");
  const auto flags = r.u8("flags");
  if ((flags & ~kFlagAdagrad) != 0) throw CheckpointError("unknown checkpoint flags");
  const bool with_state = (flags & kFlagAdagrad) != 0;

  // Reject truncated payloads before allocating from untrusted dimensions.
  {
    const std::uint64_t j = dims.items, d = dims.dim, da = dims.attn_dim, n = dims.heads;
    std::uint64_t floats = 2 * j * d;
    if (kind == static_cast<std::uint8_t>(ModelKind::kAi2v)) {
      floats += n * (2 * da * d + d * d) + d * n * d + 4 * d * d + d + d * d + j;
    }
    if (with_state) floats *= 2;
    const auto here = in.tellg();
    if (here != std::istream::pos_type(-1)) {
      in.seekg(0, std::ios::end);
      const auto end = in.tellg();
      in.seekg(here);
      if (end != std::istream::pos_type(-1) && static_cast<std::uint64_t>(end - here) < floats * 4) {
        throw CheckpointError("truncated checkpoint: header promises more tensor data than the file holds");
      }
    }
  }

  if (kind == static_cast<std::uint8_t>(ModelKind::kI2v)) {
    if (dims.attn_dim != 0 || dims.heads != 0) throw CheckpointError("I2V checkpoint with attention dimensions");
    I2vCheckpoint ck{I2vParams::zeros(dims.items, dims.dim), std::nullopt};
    read_body(r, ck.params, ck.state, with_state, I2vParams::zeros(dims.items, dims.dim));
    r.expect_end();
    return ck;
  }
  if (kind == static_cast<std::uint8_t>(ModelKind::kAi2v)) {
    if (dims.dim == 0 || dims.attn_dim == 0 || dims.heads == 0) throw CheckpointError("AI2V checkpoint with zero dimension");
    Ai2vCheckpoint ck{Ai2vParams::zeros(dims), std::nullopt};
    read_body(r, ck.params, ck.state, with_state, Ai2vParams::zeros(dims));
    r.expect_end();
    return ck;
  }
  throw CheckpointError("unknown model kind " + std::to_string(kind));
}

void save_checkpoint(const std::string& path, const I2vParams& params, const AdagradState<I2vParams>* state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  write_checkpoint(out, params, state);
}

void save_checkpoint(const std::string& path, const Ai2vParams& params, const AdagradState<Ai2vParams>* state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  write_checkpoint(out, params, state);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint: " + path);
  return read_checkpoint(in);
}

ModelKind checkpoint_kind(const Checkpoint& ckpt) {
  return std::holds_alternative<I2vCheckpoint>(ckpt) ? ModelKind::kI2v : ModelKind::kAi2v;
}

Ai2vCheckpoint load_ai2v_checkpoint(const std::string& path) {
  auto ck = load_checkpoint(path);
  if (auto* p = std::get_if<Ai2vCheckpoint>(&ck)) return std::move(*p);
  throw CheckpointError("model-type mismatch: expected an AI2V checkpoint, found I2V in " + path);
}

I2vCheckpoint load_i2v_checkpoint(const std::string& path) {
  auto ck = load_checkpoint(path);
  if (auto* p = std::get_if<I2vCheckpoint>(&ck)) return std::move(*p);
  throw CheckpointError("model-type mismatch: expected an I2V checkpoint, found AI2V in " + path);
}

}  // namespace ai2v
