#include "rfsep/commands.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

#include "rfsep/io.hpp"
#include "rfsep/parallel.hpp"

namespace rfsep {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kGenerateStream = 0x6e;
constexpr std::uint64_t kSinrStream = 0x51;

MixtureRecipe base_recipe(const ExperimentConfig& cfg, const SoiModel& soi, const InterferenceSource& source) {
  MixtureRecipe r;
  r.sinr_db = cfg.mixture.sinr_db;
  r.length = soi.length();
  r.soi_kind = soi.kind;
  r.interference_source = source.name();
  return r;
}

fs::path loss_log_path(const fs::path& weights) {
  fs::path p = weights;
  p.replace_extension(".loss.csv");
  return p;
}

}  // namespace

nn::ExampleGenerator training_generator(const ExperimentConfig& cfg, std::shared_ptr<const InterferenceSource> source) {
  auto soi = std::make_shared<SoiModel>(build_soi(cfg.soi));
  const auto recipe = base_recipe(cfg, *soi, *source);
  const auto range = cfg.mixture.train_sinr_range;
  return [soi, source, recipe, range](std::uint64_t seed) {
    auto r = recipe;
    r.seed = seed;
    if (range) {
      Rng rng(derive_seed(seed, kSinrStream));
      r.sinr_db = std::uniform_real_distribution<double>(range->first, range->second)(rng);
    }
    return synthesize_example(*soi, *source, r);
  };
}

BlockCovariance fit_lmmse_covariance(const ExperimentConfig& cfg, const InterferenceSource& source, unsigned threads) {
  const auto soi = build_soi(cfg.soi);
  auto recipe = base_recipe(cfg, soi, source);
  recipe.sinr_db = 0.0;
  const std::size_t B = std::min(cfg.lmmse.block_len, soi.length());
  CovarianceAccumulator acc_s(B), acc_b(B);
  // Examples are synthesized in parallel batches and accumulated in index order.
  const std::size_t batch = std::max<std::size_t>(16, threads);
  for (std::size_t first = 0; first < cfg.lmmse.examples; first += batch) {
    const std::size_t count = std::min(batch, cfg.lmmse.examples - first);
    std::vector<MixtureExample> exs(count);
    parallel_for(count, threads, [&](std::size_t i) {
      auto r = recipe;
      r.seed = derive_seed(cfg.train.seed, 0x1e, first + i);
      exs[i] = synthesize_example(soi, source, r);
    });
    for (const auto& ex : exs) {
      acc_s.add(ex.s);
      acc_b.add(ex.b);
    }
  }
  BlockCovariance cov;
  cov.block_len = B;
  cov.sample_count = acc_s.blocks();
  cov.css = acc_s.result();
  cov.cbb = acc_b.result();
  return cov;
}

LmmseSeparator lmmse_at_sinr(const CMatrix& css, const CMatrix& cbb_unit, double sinr_db,
                             std::optional<double> regularization) {
  return LmmseSeparator(css, cbb_unit * std::pow(10.0, -sinr_db / 10.0), regularization);
}

SweepSpec make_sweep_method(const std::string& method, const std::optional<fs::path>& weights,
                            const ExperimentConfig& cfg, unsigned threads) {
  SweepSpec spec;
  spec.method = method;
  if (method == "mf") {
    spec.separator = mf_passthrough;
    return spec;
  }
  if (method == "lmmse") {
    CMatrix css, cbb;
    if (weights) {
      const auto c = io::load_weights(resolve_data_path(*weights, {}));
      const auto sep = io::unpack_lmmse(c);
      css = sep.css();
      cbb = sep.cbb();
    } else {
      const auto source = build_source(cfg.interference, Split::train, cfg.base_dir);
      auto cov = fit_lmmse_covariance(cfg, *source, threads);
      css = std::move(cov.css);
      cbb = std::move(cov.cbb);
    }
    const auto reg = cfg.lmmse.regularization;
    spec.per_sinr = [css, cbb, reg](double sinr_db) -> SeparatorFn {
      auto sep = std::make_shared<const LmmseSeparator>(lmmse_at_sinr(css, cbb, sinr_db, reg));
      return [sep](const ComplexSignal& y) { return sep->separate(y); };
    };
    return spec;
  }
  if (method == "unet" || method == "wavenet") {
    if (!weights) throw ParameterError("method '" + method + "' needs a weights file (--weights)");
    std::shared_ptr<const nn::SeparatorNet<float>> model =
        io::unpack_model<float>(io::load_weights(resolve_data_path(*weights, {})));
    if (nn::to_string(model->spec().kind) != method)
      throw ParameterError("weights hold a " + nn::to_string(model->spec().kind) + " model, not " + method);
    spec.separator = [model](const ComplexSignal& y) { return model->separate(y); };
    return spec;
  }
  throw ParameterError("unknown method '" + method + "' (expected mf, lmmse, unet or wavenet)");
}

GenerateSummary cmd_generate(const ExperimentConfig& cfg, const fs::path& out_dir, unsigned threads,
                             std::ostream& log) {
  const auto soi = build_soi(cfg.soi);
  const auto source = build_source(cfg.interference, Split::test, cfg.base_dir);
  const auto recipe = base_recipe(cfg, soi, *source);
  const std::size_t count = cfg.mixture.examples;
  std::vector<MixtureExample> examples(count);
  parallel_for(count, threads, [&](std::size_t i) {
    auto r = recipe;
    r.seed = derive_seed(cfg.seed, kGenerateStream, i);
    examples[i] = synthesize_example(soi, *source, r);
  });

  std::vector<ComplexSignal> y, s, b;
  std::vector<BitStream> bits;
  json records = json::array();
  for (std::size_t i = 0; i < count; ++i) {
    const auto& ex = examples[i];
    y.push_back(ex.y);
    s.push_back(ex.s);
    b.push_back(ex.b);
    bits.push_back(ex.bits);
    records.push_back({{"index", i},
                       {"seed", ex.recipe.seed},
                       {"sinr_db", ex.recipe.sinr_db},
                       {"phase", ex.phase},
                       {"empirical_sinr_db", ex.empirical_sinr_db}});
  }
  fs::create_directories(out_dir);
  io::write_frame_file(out_dir / "y.rfch", y);
  io::write_frame_file(out_dir / "s.rfch", s);
  io::write_frame_file(out_dir / "b.rfch", b);
  io::write_bits(out_dir / "bits.bin", bits);

  GenerateSummary summary;
  summary.examples = count;
  summary.bits_per_example = soi.bit_count();
  summary.manifest = out_dir / "manifest.json";
  json manifest = {{"format", "rfsep-dataset"},
                   {"version", 1},
                   {"examples", count},
                   {"length", soi.length()},
                   {"bits_per_example", summary.bits_per_example},
                   {"interference_source", source->name()},
                   {"files", {{"y", "y.rfch"}, {"s", "s.rfch"}, {"b", "b.rfch"}, {"bits", "bits.bin"}}},
                   {"config", to_json(cfg)},
                   {"records", records}};
  io::write_text(summary.manifest, manifest.dump(2) + "\n");
  log << "wrote " << count << " examples of " << soi.length() << " samples to " << out_dir.string() << "\n";
  return summary;
}

std::vector<double> cmd_ingest(const fs::path& raw, std::size_t frame_len, const fs::path& out, bool truncate,
                               std::ostream& log) {
  if (frame_len == 0) throw ParameterError("frame length must be positive");
  const auto samples = io::read_raw_iq(raw, frame_len, truncate);
  const std::size_t num_frames = samples.size() / frame_len;
  if (num_frames == 0) throw io::FormatError(raw.string() + ": shorter than one frame of " + std::to_string(frame_len));
  std::vector<ComplexSignal> frames(num_frames);
  std::vector<double> powers(num_frames);
  for (std::size_t f = 0; f < num_frames; ++f) {
    frames[f].assign(samples.begin() + static_cast<long>(f * frame_len),
                     samples.begin() + static_cast<long>((f + 1) * frame_len));
    try {
      powers[f] = normalize_unit_power(frames[f]);
    } catch (const ParameterError& e) {
      throw io::FormatError(raw.string() + ": frame " + std::to_string(f) + ": " + e.what());
    }
    log << "frame " << f << " power " << io::format_double(powers[f]) << "\n";
  }
  io::write_frame_file(out, frames);
  log << "wrote " << num_frames << " frames of " << frame_len << " samples to " << out.string() << "\n";
  return powers;
}

std::string loss_log_csv(const std::vector<nn::LossRecord>& history) {
  std::string out = "epoch,step,train_loss,validation_loss\n";
  for (const auto& r : history)
    out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + io::format_double(r.train_loss) + "," +
           io::format_double(r.validation_loss) + "\n";
  return out;
}

nn::TrainResult cmd_train(ExperimentConfig cfg, const std::optional<fs::path>& dataset, const fs::path& weights_out,
                          unsigned threads, std::ostream& log) {
  if (dataset) {
    cfg.interference.kind = "file";
    cfg.interference.path = resolve_data_path(*dataset, {});
  }
  const auto source = build_source(cfg.interference, Split::train, cfg.base_dir);
  json summary = {{"config", to_json(cfg)}};

  if (cfg.method == "lmmse") {
    const auto cov = fit_lmmse_covariance(cfg, *source, threads);
    auto container = io::pack_lmmse(LmmseSeparator(cov.css, cov.cbb, cfg.lmmse.regularization));
    container.metadata["reference_sinr_db"] = 0.0;
    container.metadata["blocks"] = cov.sample_count;
    container.metadata["config"] = summary["config"];
    io::save_weights(weights_out, container);
    log << "estimated " << cov.block_len << "-sample block covariances from " << cov.sample_count
        << " blocks; wrote " << weights_out.string() << "\n";
    return {};
  }

  const auto soi = build_soi(cfg.soi);
  auto model = nn::make_model<float>(cfg.model);
  model->check_length(soi.length());
  auto tcfg = cfg.train;
  tcfg.threads = threads;
  const auto gen = training_generator(cfg, source);
  log << "training " << cfg.method << " (" << model->params().scalar_count() << " parameters) for up to "
      << tcfg.max_steps << " steps\n";
  const auto result = nn::train(*model, gen, gen, tcfg, [&](const nn::LossRecord& r) {
    log << "epoch " << r.epoch << " step " << r.step << " train " << io::format_double(r.train_loss)
        << " validation " << io::format_double(r.validation_loss) << "\n";
  });

  auto container = io::pack_model(*model);
  container.metadata["config"] = summary["config"];
  container.metadata["training"] = {{"steps", result.steps},
                                    {"epochs", result.history.size()},
                                    {"best_validation", result.best_validation},
                                    {"early_stopped", result.early_stopped},
                                    {"seed", tcfg.seed}};
  io::save_weights(weights_out, container);
  io::write_text(loss_log_path(weights_out), loss_log_csv(result.history));
  log << "best validation loss " << io::format_double(result.best_validation) << "; wrote "
      << weights_out.string() << "\n";
  return result;
}

SweepResult cmd_sweep(const ExperimentConfig& cfg, const std::vector<std::string>& methods,
                      const std::map<std::string, fs::path>& weights, const fs::path& out_csv, unsigned threads,
                      std::ostream& log) {
  if (methods.empty()) throw ParameterError("no methods to sweep");
  for (const auto& [m, path] : weights)
    if (std::find(methods.begin(), methods.end(), m) == methods.end())
      throw ParameterError("weights given for method '" + m + "' which is not being swept");
  std::vector<SweepSpec> specs;
  for (const auto& m : methods) {
    const auto it = weights.find(m);
    specs.push_back(make_sweep_method(m, it == weights.end() ? std::nullopt : std::optional(it->second), cfg, threads));
  }
  const auto soi = build_soi(cfg.soi);
  const auto source = build_source(cfg.interference, Split::test, cfg.base_dir);
  auto result = sinr_sweep(specs, soi, *source, cfg.sweep.sinr_db, cfg.sweep.trials, cfg.seed, threads);
  result.sort();
  io::write_text(out_csv, io::sweep_to_csv(result));
  for (const auto& row : result.rows) {
    if (row.error) log << row.method << " at " << row.sinr_db << " dB failed: " << *row.error << "\n";
  }
  log << "wrote " << result.rows.size() << " rows to " << out_csv.string() << "\n";
  return result;
}

json cmd_eval(const ExperimentConfig& cfg, const fs::path& dataset_dir, const std::string& method,
              const std::optional<fs::path>& weights, const fs::path& out, unsigned threads, std::ostream& log) {
  const auto dir = resolve_data_path(dataset_dir, {});
  const json manifest = json::parse(io::read_text(dir / "manifest.json"));
  if (manifest.value("format", "") != "rfsep-dataset")
    throw io::FormatError((dir / "manifest.json").string() + ": not an rfsep dataset manifest");
  const auto data_cfg = parse_config(manifest.at("config").dump(), (dir / "manifest.json").string());
  const auto soi = build_soi(data_cfg.soi);
  const auto y = io::read_frame_file(dir / "y.rfch").frames;
  const auto s = io::read_frame_file(dir / "s.rfch").frames;
  const std::size_t count = manifest.at("examples").get<std::size_t>();
  const std::size_t bits_per = manifest.at("bits_per_example").get<std::size_t>();
  if (y.size() != count || s.size() != count)
    throw io::FormatError(dir.string() + ": frame files do not hold " + std::to_string(count) + " examples");
  std::vector<BitStream> bits(count);
  if (bits_per > 0) bits = io::read_bits(dir / "bits.bin", bits_per);
  if (bits.size() != count) throw io::FormatError(dir.string() + ": bit file does not match the example count");

  const auto spec = make_sweep_method(method, weights, cfg, threads);
  std::map<double, SeparatorFn> by_sinr;
  std::vector<double> sinr(count);
  for (std::size_t i = 0; i < count; ++i) {
    sinr[i] = manifest.at("records").at(i).at("sinr_db").get<double>();
    if (!by_sinr.count(sinr[i])) by_sinr[sinr[i]] = spec.per_sinr ? spec.per_sinr(sinr[i]) : spec.separator;
  }

  std::vector<double> mse(count);
  std::vector<std::size_t> errors(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const auto est = by_sinr.at(sinr[i])(y[i]);
    double acc = 0.0;
    for (std::size_t n = 0; n < est.size(); ++n) acc += std::norm(est[n] - s[i][n]);
    mse[i] = acc / static_cast<double>(est.size());
    if (bits_per > 0) errors[i] = bit_errors(soi.demodulate(est), bits[i]);
  });

  json per = json::array();
  double mse_sum = 0.0;
  std::size_t err_sum = 0;
  for (std::size_t i = 0; i < count; ++i) {
    per.push_back({{"index", i}, {"mse_db", linear_to_db(mse[i])}, {"bit_errors", errors[i]}});
    mse_sum += mse[i];
    err_sum += errors[i];
  }
  json result = {{"method", method},
                 {"dataset", dir.generic_string()},
                 {"examples", count},
                 {"mse_db", linear_to_db(mse_sum / static_cast<double>(count))},
                 {"ber", bits_per > 0 ? json(static_cast<double>(err_sum) / static_cast<double>(bits_per * count))
                                      : json(nullptr)},
                 {"per_example", per}};
  io::write_text(out, result.dump(2) + "\n");
  log << method << ": mse " << io::format_double(result["mse_db"].get<double>()) << " dB";
  if (bits_per > 0) log << ", ber " << io::format_double(result["ber"].get<double>());
  log << "\n";
  return result;
}

std::string cmd_report(const std::vector<fs::path>& csvs) {
  std::vector<SweepRow> rows;
  for (const auto& p : csvs) {
    auto r = io::sweep_from_csv(io::read_text(p));
    rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  }
  std::set<std::string> methods;
  std::set<double> points;
  std::map<std::pair<std::string, double>, const SweepRow*> cell;
  for (const auto& r : rows) {
    methods.insert(r.method);
    points.insert(r.sinr_db);
    cell[{r.method, r.sinr_db}] = &r;
  }
  auto table = [&](const char* title, auto value) {
    std::string out = std::string("## ") + title + "\n\n| SINR (dB) |";
    for (const auto& m : methods) out += " " + m + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < methods.size(); ++i) out += "---|";
    out += "\n";
    for (double p : points) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%g", p);
      out += std::string("| ") + buf + " |";
      for (const auto& m : methods) {
        const auto it = cell.find({m, p});
        out += " " + (it == cell.end() ? std::string("") : value(*it->second)) + " |";
      }
      out += "\n";
    }
    return out + "\n";
  };
  auto fmt = [](const char* f, double v) {
    if (std::isnan(v)) return std::string("n/a");
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return std::string(buf);
  };
  return table("MSE (dB)", [&](const SweepRow& r) { return fmt("%.2f", r.mse_db); }) +
         table("BER", [&](const SweepRow& r) { return fmt("%.3e", r.ber); });
}

}  // namespace rfsep
