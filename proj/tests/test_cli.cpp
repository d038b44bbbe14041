#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rfsep/commands.hpp"
#include "rfsep/io.hpp"

using namespace rfsep;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rfsep_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args, const fs::path& log) {
  const char* cli = std::getenv("RFSEP_CLI");
  if (cli == nullptr) cli = RFSEP_CLI;
  const std::string cmd = std::string("\"") + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  const auto p = dir / name;
  std::ofstream(p) << body;
  return p;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("generate is reproducible and writes the documented layout") {
  const auto dir = scratch("generate");
  const auto cfg = write_config(dir, "c.json", R"({"seed": 3, "mixture": {"examples": 10}})");
  REQUIRE(run("generate --config " + q(cfg) + " --out " + q(dir / "a"), dir / "log1") == 0);
  REQUIRE(run("generate --config " + q(cfg) + " --out " + q(dir / "b"), dir / "log2") == 0);
  for (const char* f : {"y.rfch", "s.rfch", "b.rfch", "bits.bin", "manifest.json"})
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);

  const auto manifest = json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["records"].size() == 10);
  CHECK(manifest["bits_per_example"] == 5120);
  CHECK(manifest["length"] == 40960);
  const auto bits = io::read_bits(dir / "a" / "bits.bin", 5120);
  CHECK(bits.size() == 10);
  const auto y = io::read_frame_file(dir / "a" / "y.rfch");
  CHECK(y.header.frame_len == 40960);
  CHECK(y.header.num_frames == 10);

  REQUIRE(run("generate --config " + q(cfg) + " --seed 4 --out " + q(dir / "c"), dir / "log3") == 0);
  CHECK(slurp(dir / "a" / "y.rfch") != slurp(dir / "c" / "y.rfch"));
}

TEST_CASE("sweep writes one row per SINR point and is byte-identical across runs") {
  const auto dir = scratch("sweep");
  const auto cfg = write_config(dir, "c.json", R"({"soi": {"length": 2048}, "sweep": {"trials": 2}})");
  REQUIRE(run("sweep --config " + q(cfg) + " --method mf --threads 1 --out " + q(dir / "a.csv"), dir / "log") == 0);
  REQUIRE(run("sweep --config " + q(cfg) + " --method mf --threads 1 --out " + q(dir / "b.csv"), dir / "log") == 0);
  REQUIRE(run("sweep --config " + q(cfg) + " --method mf --threads 3 --out " + q(dir / "c.csv"), dir / "log") == 0);
  const auto text = slurp(dir / "a.csv");
  CHECK(text == slurp(dir / "b.csv"));
  CHECK(text == slurp(dir / "c.csv"));
  const auto parsed = io::sweep_from_csv(text);
  REQUIRE(parsed.rows.size() == 11);
  CHECK(parsed.rows.front().sinr_db == -30.0);
  CHECK(parsed.rows.back().sinr_db == 0.0);
  CHECK(io::sweep_to_csv(parsed) == text);

  REQUIRE(run("report " + q(dir / "a.csv"), dir / "report.md") == 0);
  CHECK(slurp(dir / "report.md").find("| -30 |") != std::string::npos);
}

TEST_CASE("ingest cuts raw IQ into unit-power frames") {
  const auto dir = scratch("ingest");
  const std::size_t L = 43560, frames = 100;
  ComplexSignal raw(L * frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const auto block = complex_gaussian(L, 1.0 + static_cast<double>(i), i + 1);
    std::copy(block.begin(), block.end(), raw.begin() + static_cast<long>(i * L));
  }
  io::write_raw_iq(dir / "raw.iq", raw);
  REQUIRE(run("ingest " + q(dir / "raw.iq") + " --frame-len 43560 --out " + q(dir / "f.rfch"), dir / "log") == 0);
  const auto h = io::read_frame_header(dir / "f.rfch");
  CHECK(h.frame_len == L);
  CHECK(h.num_frames == frames);
  const auto f = io::read_frame_file(dir / "f.rfch");
  for (std::size_t i = 0; i < frames; i += 33) {
    CHECK(power(f.frames[i]) == doctest::Approx(1.0).epsilon(1e-5));
    const double gain = std::abs(f.frames[i][0]) / std::abs(raw[i * L]);
    for (std::size_t n = 0; n < L; n += 1000)
      CHECK(std::abs(f.frames[i][n] - raw[i * L + n] * gain) <= 1e-5 * (1 + std::abs(f.frames[i][n])));
  }

  ComplexSignal partial(raw.begin(), raw.begin() + static_cast<long>(2 * L + 7));
  io::write_raw_iq(dir / "partial.iq", partial);
  CHECK(run("ingest " + q(dir / "partial.iq") + " --frame-len 43560 --out " + q(dir / "p.rfch"), dir / "log") == 2);
  CHECK(run("ingest " + q(dir / "partial.iq") + " --frame-len 43560 --truncate --out " + q(dir / "p.rfch"),
            dir / "log") == 0);
  CHECK(io::read_frame_header(dir / "p.rfch").num_frames == 2);

  ComplexSignal with_zero(3 * 64);
  const auto noise = complex_gaussian(64, 1.0, 9);
  std::copy(noise.begin(), noise.end(), with_zero.begin());
  io::write_raw_iq(dir / "zero.iq", with_zero);
  CHECK(run("ingest " + q(dir / "zero.iq") + " --frame-len 64 --out " + q(dir / "z.rfch"), dir / "log") == 2);
  CHECK(slurp(dir / "log").find("zero-power frame") != std::string::npos);
}

TEST_CASE("train writes a loss log and weights that reproduce the validation loss") {
  const auto dir = scratch("train");
  const auto cfg = write_config(dir, "c.json", R"({
    "seed": 2,
    "soi": {"length": 1024},
    "interference": {"kind": "framed", "frame_len": 4096, "num_frames": 8},
    "model": {"kind": "wavenet", "wavenet": {"residual_blocks": 2, "channels": 4}},
    "train": {"max_steps": 12, "eval_every": 4, "batch_size": 2, "validation_examples": 3, "patience": 100}
  })");
  REQUIRE(run("train --config " + q(cfg) + " --out " + q(dir / "w.json"), dir / "log") == 0);
  const auto loss = slurp(dir / "w.loss.csv");
  std::istringstream in(loss);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,step,train_loss,validation_loss");
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  const auto weights = io::load_weights(dir / "w.json");
  CHECK(weights.metadata["training"]["epochs"] == 3);
  const auto model = io::unpack_model<float>(weights);
  const auto rcfg = parse_config(weights.metadata["config"].dump());
  const auto gen = training_generator(rcfg, build_source(rcfg.interference, Split::train, dir));
  std::vector<MixtureExample> val;
  for (std::size_t i = 0; i < rcfg.train.validation_examples; ++i)
    val.push_back(gen(derive_seed(rcfg.train.seed, 0x7a11d, i)));
  const double best = weights.metadata["training"]["best_validation"].get<double>();
  CHECK(std::abs(nn::validation_mse(*model, val) - best) <= 1e-12);

  REQUIRE(run("train --config " + q(cfg) + " --method lmmse --out " + q(dir / "l.json"), dir / "log") == 0);
  REQUIRE(run("sweep --config " + q(cfg) + " --method wavenet --method lmmse --weights wavenet=" + q(dir / "w.json") +
                  " --weights lmmse=" + q(dir / "l.json") + " --out " + q(dir / "s.csv"),
              dir / "log") == 0);
  CHECK(io::sweep_from_csv(slurp(dir / "s.csv")).rows.size() == 22);

  REQUIRE(run("generate --config " + q(cfg) + " --out " + q(dir / "data"), dir / "log") == 0);
  REQUIRE(run("eval --config " + q(cfg) + " --dataset " + q(dir / "data") + " --method wavenet --weights " +
                  q(dir / "w.json") + " --out " + q(dir / "e.json"),
              dir / "log") == 0);
  const auto e = json::parse(slurp(dir / "e.json"));
  CHECK(e["examples"] == 10);
  CHECK(e["per_example"].size() == 10);
}

TEST_CASE("exit codes: 0 success, 1 usage or config, 2 runtime") {
  const auto dir = scratch("codes");
  CHECK(run("", dir / "log") == 1);
  CHECK(run("frobnicate", dir / "log") == 1);
  CHECK(run("--help", dir / "log") == 0);
  const auto bad = write_config(dir, "bad.json", "{\n  \"soi\": {\"lenght\": 5}\n}");
  CHECK(run("generate --config " + q(bad) + " --out " + q(dir / "x"), dir / "log") == 1);
  CHECK(slurp(dir / "log").find("bad.json:2: /soi/lenght") != std::string::npos);
  CHECK(run("sweep --method unet --out " + q(dir / "u.csv"), dir / "log") == 1);
  CHECK(run("generate --out " + q(dir / "x"), dir / "log") == 0);
  CHECK(run("eval --dataset " + q(dir / "missing") + " --method mf --out " + q(dir / "e.json"), dir / "log") == 2);
  CHECK(run("ingest " + q(dir / "missing.iq") + " --frame-len 8 --out " + q(dir / "f.rfch"), dir / "log") == 2);
}
