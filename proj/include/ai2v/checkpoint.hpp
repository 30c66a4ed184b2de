#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "ai2v/common.hpp"
#include "ai2v/i2v.hpp"
#include "ai2v/model.hpp"
#include "ai2v/optim.hpp"

namespace ai2v {

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

enum class ModelKind : std::uint8_t { kI2v = 0, kAi2v = 1 };

const char* model_kind_name(ModelKind kind);

// Little-endian layout:
//   "AI2VCKPT" | u32 version = 1 | u8 model kind | u32 J, d, d_a, N |
//   u8 flags (bit 0: Adagrad state present) | f32 tensors row-major in
//   for_each_tensor order | accumulators in the same order when flagged.
// I2V files carry only the two embedding tables and d_a = N = 0.
inline constexpr char kCheckpointMagic[8] = {'A', 'I', '2', 'V', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct I2vCheckpoint {
  I2vParams params;
  std::optional<AdagradState<I2vParams>> state;
};

struct Ai2vCheckpoint {
  Ai2vParams params;
  std::optional<AdagradState<Ai2vParams>> state;
};

using Checkpoint = std::variant<I2vCheckpoint, Ai2vCheckpoint>;

void write_checkpoint(std::ostream& out, const I2vParams& params, const AdagradState<I2vParams>* state = nullptr);
void write_checkpoint(std::ostream& out, const Ai2vParams& params, const AdagradState<Ai2vParams>* state = nullptr);
/// Throws CheckpointError on bad magic, unsupported version, unknown model
/// kind, truncation or trailing bytes.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const I2vParams& params, const AdagradState<I2vParams>* state = nullptr);
void save_checkpoint(const std::string& path, const Ai2vParams& params,
                     const AdagradState<Ai2vParams>* state = nullptr);
Checkpoint load_checkpoint(const std::string& path);

/// Typed loads; a checkpoint of the other model kind is a CheckpointError.
Ai2vCheckpoint load_ai2v_checkpoint(const std::string& path);
I2vCheckpoint load_i2v_checkpoint(const std::string& path);

ModelKind checkpoint_kind(const Checkpoint& ckpt);

}  // namespace ai2v
