#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfsep/baselines.hpp"
#include "rfsep/config.hpp"
#include "rfsep/eval.hpp"
#include "rfsep/neural/train.hpp"

namespace rfsep {

/// Example generator for training: train-split interference, SINR fixed or drawn from the
/// configured range.
nn::ExampleGenerator training_generator(const ExperimentConfig& cfg, std::shared_ptr<const InterferenceSource> source);

/// Covariances from cfg.lmmse.examples training mixtures; C_bb is for unit-power interference. The
/// block length is cfg.lmmse.block_len clamped to the signal length.
BlockCovariance fit_lmmse_covariance(const ExperimentConfig& cfg, const InterferenceSource& source,
                                     unsigned threads = 1);

/// LMMSE for a target SINR from unit-power covariances: C_bb is scaled by 10^(-sinr/10).
LmmseSeparator lmmse_at_sinr(const CMatrix& css, const CMatrix& cbb_unit, double sinr_db,
                             std::optional<double> regularization);

/// Sweep spec for one method. Neural methods and a stored lmmse need `weights`; lmmse without
/// weights fits its covariances from the config's training split.
SweepSpec make_sweep_method(const std::string& method, const std::optional<std::filesystem::path>& weights,
                            const ExperimentConfig& cfg, unsigned threads);

struct GenerateSummary {
  std::size_t examples = 0;
  std::size_t bits_per_example = 0;
  std::filesystem::path manifest;
};

/// Writes y.rfch, s.rfch, b.rfch, bits.bin and manifest.json under out_dir.
GenerateSummary cmd_generate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, unsigned threads,
                             std::ostream& log);

/// Cuts raw interleaved float32 IQ into unit-power frames. Returns the per-frame power before
/// normalization. A trailing partial frame is an error unless `truncate` is set.
std::vector<double> cmd_ingest(const std::filesystem::path& raw, std::size_t frame_len,
                               const std::filesystem::path& out, bool truncate, std::ostream& log);

/// Trains cfg.method ("unet", "wavenet" or "lmmse"). `dataset` overrides the configured interference
/// with a frame file. Writes the weight container and, for neural models, "<stem>.loss.csv".
nn::TrainResult cmd_train(ExperimentConfig cfg, const std::optional<std::filesystem::path>& dataset,
                          const std::filesystem::path& weights_out, unsigned threads, std::ostream& log);

SweepResult cmd_sweep(const ExperimentConfig& cfg, const std::vector<std::string>& methods,
                      const std::map<std::string, std::filesystem::path>& weights,
                      const std::filesystem::path& out_csv, unsigned threads, std::ostream& log);

/// Scores a method on a dataset written by cmd_generate; writes a JSON summary to `out`.
nlohmann::json cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& dataset_dir,
                        const std::string& method, const std::optional<std::filesystem::path>& weights,
                        const std::filesystem::path& out, unsigned threads, std::ostream& log);

/// Markdown tables (MSE and BER per SINR, one column per method) from sweep CSVs.
std::string cmd_report(const std::vector<std::filesystem::path>& csvs);

std::string loss_log_csv(const std::vector<nn::LossRecord>& history);

}  // namespace rfsep
