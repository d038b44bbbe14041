#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsep/common.hpp"
#include "rfsep/eval.hpp"
#include "rfsep/neural/models.hpp"

namespace rfsep::io {

/// Raised for unreadable or malformed files; carries the path in its message.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Frame file: "RFCH" | u32 version | u64 frame_len | u64 num_frames | num_frames*frame_len
// interleaved (re, im) float32 pairs. All little-endian; header is 24 bytes.
inline constexpr char kFrameMagic[4] = {'R', 'F', 'C', 'H'};
inline constexpr std::uint32_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 24;

struct FrameFileHeader {
  std::uint32_t version = kFrameVersion;
  std::uint64_t frame_len = 0;
  std::uint64_t num_frames = 0;
};

struct FrameFile {
  FrameFileHeader header;
  std::vector<ComplexSignal> frames;
};

/// All frames must share one length.
void write_frame_file(const std::filesystem::path& path, const std::vector<ComplexSignal>& frames);
FrameFile read_frame_file(const std::filesystem::path& path);
FrameFileHeader read_frame_header(const std::filesystem::path& path);

/// Raw interleaved float32 IQ (no header). Samples past the last whole multiple of `keep_multiple`
/// (and any trailing partial sample) are dropped when `drop_partial` is set, otherwise rejected.
std::vector<cdouble> read_raw_iq(const std::filesystem::path& path, std::size_t keep_multiple = 1,
                                 bool drop_partial = false);
void write_raw_iq(const std::filesystem::path& path, const std::vector<cdouble>& samples);

void write_bits(const std::filesystem::path& path, const std::vector<BitStream>& streams);
std::vector<BitStream> read_bits(const std::filesystem::path& path, std::size_t per_stream);

/// Weight container: a JSON manifest (name, shape, scalar width, byte offset per tensor, plus free
/// metadata) next to a contiguous little-endian blob "<manifest stem>.bin".
struct StoredTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t scalar_bytes = 4;  ///< 4 = float32, 8 = float64
  std::vector<std::byte> bytes;

  template <class T>
  static StoredTensor from(const std::string& name, const nn::Tensor<T>& t);
  /// Converts to T; widening/narrowing casts happen elementwise.
  template <class T>
  nn::Tensor<T> to() const;
};

struct WeightContainer {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<StoredTensor> tensors;

  const StoredTensor& find(const std::string& name) const;
};

void save_weights(const std::filesystem::path& manifest_path, const WeightContainer& container);
WeightContainer load_weights(const std::filesystem::path& manifest_path);

nlohmann::json to_json(const nn::ModelSpec& spec);
nn::ModelSpec model_spec_from_json(const nlohmann::json& j);

template <class T>
WeightContainer pack_model(const nn::SeparatorNet<T>& model);
template <class T>
std::unique_ptr<nn::SeparatorNet<T>> unpack_model(const WeightContainer& container);

WeightContainer pack_lmmse(const LmmseSeparator& sep);
LmmseSeparator unpack_lmmse(const WeightContainer& container);

inline constexpr const char* kSweepCsvHeader = "method,sinr_db,mse_db,ber,trials,seed";

/// Locale-independent; doubles use the shortest representation that re-parses exactly.
std::string format_double(double v);
double parse_double(std::string_view s);

std::string sweep_to_csv(const SweepResult& result);
SweepResult sweep_from_csv(const std::string& text);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace rfsep::io
