#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "rfsep/commands.hpp"
#include "rfsep/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

rfsep::ExperimentConfig load(const Globals& g) {
  rfsep::ExperimentConfig cfg;
  if (!g.config.empty()) cfg = rfsep::load_config(rfsep::resolve_data_path(g.config, {}));
  if (g.seed) cfg.set_seed(*g.seed);
  return cfg;
}

void require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw rfsep::ParameterError(std::string("--out is required (") + what + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-channel RF source separation: data generation, training and SINR sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Override the top-level seed");
  app.add_option("--threads", g.threads, "Worker threads; 1 runs the sequential path")->check(CLI::Range(1u, 1024u));
  app.add_option("--out", g.out, "Output path");

  auto* generate = app.add_subcommand("generate", "Write a mixture dataset (frame files, bits, manifest)");

  auto* ingest = app.add_subcommand("ingest", "Convert raw float32 IQ into a normalized frame file");
  std::string raw;
  std::size_t frame_len = 0;
  bool truncate = false;
  ingest->add_option("input", raw, "Raw interleaved float32 IQ file")->required();
  ingest->add_option("--frame-len", frame_len, "Complex samples per frame")->required();
  ingest->add_flag("--truncate", truncate, "Drop a trailing partial frame instead of failing");

  auto* train = app.add_subcommand("train", "Train a separator and write its weights");
  std::string dataset, method_override;
  train->add_option("--dataset", dataset, "Interference frame file (overrides the config)");
  train->add_option("--method", method_override, "unet, wavenet or lmmse (overrides model.kind)");

  auto* sweep = app.add_subcommand("sweep", "BER/MSE versus SINR; writes CSV");
  std::vector<std::string> methods, weights;
  sweep->add_option("--method", methods, "mf, lmmse, unet, wavenet (repeatable)")->required();
  sweep->add_option("--weights", weights, "Weights as METHOD=PATH, or PATH when sweeping one method");

  auto* eval = app.add_subcommand("eval", "Score one method on a generated dataset; writes JSON");
  std::string eval_dataset, eval_method, eval_weights;
  eval->add_option("--dataset", eval_dataset, "Directory written by generate")->required();
  eval->add_option("--method", eval_method, "mf, lmmse, unet or wavenet")->required();
  eval->add_option("--weights", eval_weights, "Weight manifest for neural or stored lmmse");

  auto* report = app.add_subcommand("report", "Markdown tables from sweep CSVs");
  std::vector<std::string> csvs;
  report->add_option("csv", csvs, "Sweep CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*generate) {
      require_out(g, "output directory");
      rfsep::cmd_generate(load(g), g.out, g.threads, std::cout);
    } else if (*ingest) {
      require_out(g, "frame file");
      rfsep::cmd_ingest(raw, frame_len, g.out, truncate, std::cout);
    } else if (*train) {
      require_out(g, "weight manifest");
      auto cfg = load(g);
      if (!method_override.empty()) {
        if (method_override != "lmmse") cfg.model.kind = rfsep::nn::parse_model_kind(method_override);
        cfg.method = method_override;
      }
      rfsep::cmd_train(cfg, dataset.empty() ? std::nullopt : std::optional<fs::path>(dataset), g.out, g.threads,
                       std::cout);
    } else if (*sweep) {
      require_out(g, "CSV file");
      std::map<std::string, fs::path> by_method;
      for (const auto& w : weights) {
        const auto eq = w.find('=');
        if (eq != std::string::npos) {
          by_method[w.substr(0, eq)] = w.substr(eq + 1);
        } else if (methods.size() == 1) {
          by_method[methods.front()] = w;
        } else {
          throw rfsep::ParameterError("--weights must be METHOD=PATH when sweeping several methods");
        }
      }
      rfsep::cmd_sweep(load(g), methods, by_method, g.out, g.threads, std::cout);
    } else if (*eval) {
      require_out(g, "JSON summary");
      rfsep::cmd_eval(load(g), eval_dataset, eval_method,
                      eval_weights.empty() ? std::nullopt : std::optional<fs::path>(eval_weights), g.out, g.threads,
                      std::cout);
    } else if (*report) {
      std::vector<fs::path> paths(csvs.begin(), csvs.end());
      const auto text = rfsep::cmd_report(paths);
      if (g.out.empty()) std::cout << text;
      else rfsep::io::write_text(g.out, text);
    }
  } catch (const rfsep::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
