#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsep/eval.hpp"
#include "rfsep/mixtures.hpp"
#include "rfsep/neural/models.hpp"
#include "rfsep/neural/train.hpp"
#include "rfsep/signals.hpp"

namespace rfsep {

/// Schema or syntax problem in an experiment config; the message carries "<origin>:<line>: <path>".
class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

struct SoiSettings {
  SoiKind kind = SoiKind::qpsk;
  std::size_t length = 40960;
  int oversampling = 16;
  double rolloff = 0.5;
  int span = 128;
  int offset = 8;
};

struct InterferenceSettings {
  std::string kind = "awgn";  ///< awgn | framed | emi | file
  std::filesystem::path path; ///< file: frame file (relative to the config or RFSEP_DATA_DIR)
  std::size_t period = 256;
  std::size_t burst_len = 512;
  double duty_cycle = 0.25;
  std::size_t frame_len = 8192;
  std::size_t num_frames = 64;
  double train_fraction = 0.8;
  bool recenter = false;
  std::uint64_t seed = 0;  ///< resolved from the top-level seed when not given
};

struct MixtureSettings {
  double sinr_db = -10.0;
  /// Training draws sinr uniformly from this range when set.
  std::optional<std::pair<double, double>> train_sinr_range;
  std::size_t examples = 10;  ///< records written by `generate`
};

struct LmmseSettings {
  std::size_t block_len = 2560;  ///< clamped to the signal length when longer
  std::size_t examples = 64;  ///< training mixtures for covariance estimation
  std::optional<double> regularization;
};

struct SweepSettings {
  std::vector<double> sinr_db = default_sinr_grid();
  std::size_t trials = 10;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  SoiSettings soi;
  InterferenceSettings interference;
  MixtureSettings mixture;
  LmmseSettings lmmse;
  std::string method = "wavenet";  ///< model.kind; "lmmse" selects the linear baseline for `train`
  nn::ModelSpec model;
  nn::TrainConfig train;
  SweepSettings sweep;
  std::filesystem::path base_dir;  ///< directory of the config file

  /// Re-derives every seed not pinned explicitly in the document from `seed`.
  void set_seed(std::uint64_t seed);

 private:
  friend ExperimentConfig parse_config(const std::string&, const std::string&);
  bool interference_seed_pinned_ = false, model_seed_pinned_ = false, train_seed_pinned_ = false;
};

/// Parses and validates a JSON config; unknown keys, wrong types and out-of-range values throw
/// ConfigError naming origin, line and JSON pointer.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config (all defaults and derived seeds filled in), for output manifests.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Line (1-based) of every object key and array element, keyed by JSON pointer.
std::map<std::string, int> json_pointer_lines(const std::string& text);

SoiModel build_soi(const SoiSettings& s);

/// Resolves `p` against base_dir, then RFSEP_DATA_DIR; returns the first existing candidate, or the
/// base_dir-relative path when none exists.
std::filesystem::path resolve_data_path(const std::filesystem::path& p, const std::filesystem::path& base_dir);

/// Interference dataset for a synthetic or file-backed source; null for awgn.
std::shared_ptr<const InterferenceDataset> build_interference_dataset(const InterferenceSettings& s,
                                                                      const std::filesystem::path& base_dir);
std::shared_ptr<const InterferenceSource> build_source(const InterferenceSettings& s, Split split,
                                                       const std::filesystem::path& base_dir);

}  // namespace rfsep
