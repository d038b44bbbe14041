#include "rfsep/config.hpp"

#include <cmath>
#include <cstdlib>
#include <set>

#include "rfsep/io.hpp"

namespace rfsep {
namespace fs = std::filesystem;
using nlohmann::json;

std::map<std::string, int> json_pointer_lines(const std::string& text) {
  struct Frame {
    bool object;
    std::string key;
    std::size_t index = 0;
    bool expecting_key = true;
    bool value_seen = false;
  };
  std::map<std::string, int> lines;
  std::vector<Frame> stack;
  int line = 1;
  lines[""] = 1;

  auto pointer = [&] {
    std::string p;
    for (const auto& f : stack) p += "/" + (f.object ? f.key : std::to_string(f.index));
    return p;
  };
  auto escape = [](const std::string& key) {
    std::string out;
    for (char c : key) out += c == '~' ? "~0" : c == '/' ? "~1" : std::string(1, c);
    return out;
  };
  auto value_start = [&] {
    if (!stack.empty() && !stack.back().object && !stack.back().value_seen) {
      stack.back().value_seen = true;
      lines.emplace(pointer(), line);
    }
    if (!stack.empty()) stack.back().value_seen = true;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) ++i;
        if (text[i] == '\n') ++line;
        s += text[i];
      }
      if (!stack.empty() && stack.back().object && stack.back().expecting_key) {
        stack.back().key = escape(s);
        stack.back().expecting_key = false;
        lines.emplace(pointer(), line);
      } else {
        value_start();
      }
    } else if (c == '{' || c == '[') {
      value_start();
      stack.push_back({c == '{', "", 0, c == '{', false});
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (c == ',') {
      if (!stack.empty()) {
        auto& f = stack.back();
        if (f.object) f.expecting_key = true;
        else ++f.index;
        f.value_seen = false;
      }
    } else if (c != ':' && !std::isspace(static_cast<unsigned char>(c))) {
      value_start();
    }
  }
  return lines;
}

namespace {

struct Context {
  std::string origin;
  std::map<std::string, int> lines;

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    std::string where = origin;
    // Nearest located ancestor if the exact pointer is unknown (e.g. a missing key).
    for (std::string p = pointer;; p = p.substr(0, p.rfind('/'))) {
      if (auto it = lines.find(p); it != lines.end()) {
        where += ":" + std::to_string(it->second);
        break;
      }
      if (p.empty()) break;
    }
    throw ConfigError(where + ": " + (pointer.empty() ? "/" : pointer) + ": " + message);
  }
};

class Section {
 public:
  Section(const json* j, std::string pointer, const Context& ctx) : j_(j), pointer_(std::move(pointer)), ctx_(ctx) {
    if (j_ && !j_->is_object()) ctx_.fail(pointer_, "expected an object");
  }

  const std::string& pointer() const { return pointer_; }
  std::string at(const std::string& key) const { return pointer_ + "/" + key; }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const { ctx_.fail(at(key), msg); }

  const json* raw(const std::string& key) {
    if (!j_) return nullptr;
    auto it = j_->find(key);
    if (it == j_->end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  Section child(const std::string& key) { return Section(raw(key), at(key), ctx_); }

  std::optional<std::uint64_t> uint(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer()) fail(key, "must be non-negative");
    fail(key, "expected an unsigned integer");
  }
  std::optional<std::int64_t> integer(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) fail(key, "expected an integer");
    return v->get<std::int64_t>();
  }
  std::optional<double> number(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_number()) fail(key, "expected a number");
    return v->get<double>();
  }
  std::optional<bool> boolean(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) fail(key, "expected true or false");
    return v->get<bool>();
  }
  std::optional<std::string> string(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) fail(key, "expected a string");
    return v->get<std::string>();
  }
  std::optional<std::vector<double>> numbers(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) ctx_.fail(at(key) + "/" + std::to_string(i), "expected a number");
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  template <class T>
  void read(const std::string& key, T& target) {
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = boolean(key)) target = *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = string(key)) target = *v;
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = number(key)) target = static_cast<T>(*v);
    } else if constexpr (std::is_unsigned_v<T>) {
      if (auto v = uint(key)) {
        if (*v > std::numeric_limits<T>::max()) fail(key, "value too large");
        target = static_cast<T>(*v);
      }
    } else {
      if (auto v = integer(key)) {
        if (*v < std::numeric_limits<T>::min() || *v > std::numeric_limits<T>::max()) fail(key, "value out of range");
        target = static_cast<T>(*v);
      }
    }
  }

  /// Rejects every key that was not consumed.
  void finish() const {
    if (!j_) return;
    for (const auto& [key, value] : j_->items())
      if (!used_.count(key)) ctx_.fail(at(key), "unknown key");
  }

 private:
  const json* j_;
  std::string pointer_;
  const Context& ctx_;
  std::set<std::string> used_;
};

void require(bool ok, const Section& s, const std::string& key, const std::string& msg) {
  if (!ok) s.fail(key, msg);
}

}  // namespace

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  if (!interference_seed_pinned_) interference.seed = derive_seed(s, 1);
  if (!model_seed_pinned_) model.seed = derive_seed(s, 2);
  if (!train_seed_pinned_) train.seed = derive_seed(s, 3);
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  Context ctx{origin, {}};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ConfigError(origin + ":" + std::to_string(line) + ": syntax error: " + e.what());
  }
  ctx.lines = json_pointer_lines(text);
  ExperimentConfig cfg;
  Section root(&doc, "", ctx);

  std::uint64_t seed = 1;
  root.read("seed", seed);

  {
    auto s = root.child("soi");
    if (auto kind = s.string("kind")) {
      try {
        cfg.soi.kind = parse_soi_kind(*kind);
      } catch (const ParameterError& e) {
        s.fail("kind", e.what());
      }
    }
    s.read("length", cfg.soi.length);
    s.read("oversampling", cfg.soi.oversampling);
    s.read("rolloff", cfg.soi.rolloff);
    s.read("span", cfg.soi.span);
    s.read("offset", cfg.soi.offset);
    s.finish();
    require(cfg.soi.length > 0, s, "length", "must be positive");
    try {
      build_soi(cfg.soi);
    } catch (const ParameterError& e) {
      ctx.fail(s.pointer(), e.what());
    }
  }
  {
    auto s = root.child("interference");
    s.read("kind", cfg.interference.kind);
    const auto& k = cfg.interference.kind;
    require(k == "awgn" || k == "framed" || k == "emi" || k == "file", s, "kind",
            "must be one of awgn, framed, emi, file (got '" + k + "')");
    if (auto p = s.string("path")) cfg.interference.path = *p;
    require(k != "file" || !cfg.interference.path.empty(), s, "path", "required when kind is 'file'");
    s.read("period", cfg.interference.period);
    s.read("burst_len", cfg.interference.burst_len);
    s.read("duty_cycle", cfg.interference.duty_cycle);
    s.read("frame_len", cfg.interference.frame_len);
    s.read("num_frames", cfg.interference.num_frames);
    s.read("train_fraction", cfg.interference.train_fraction);
    s.read("recenter", cfg.interference.recenter);
    if (auto v = s.uint("seed")) {
      cfg.interference.seed = *v;
      cfg.interference_seed_pinned_ = true;
    }
    s.finish();
    require(cfg.interference.period > 0, s, "period", "must be positive");
    require(cfg.interference.burst_len > 0, s, "burst_len", "must be positive");
    require(cfg.interference.duty_cycle > 0 && cfg.interference.duty_cycle <= 1, s, "duty_cycle", "must be in (0, 1]");
    require(cfg.interference.frame_len >= cfg.soi.length || k == "awgn" || k == "file", s, "frame_len",
            "must be at least soi.length");
    require(cfg.interference.num_frames >= 2, s, "num_frames", "must be at least 2 (train and test)");
    require(cfg.interference.train_fraction > 0 && cfg.interference.train_fraction < 1, s, "train_fraction",
            "must be in (0, 1)");
  }
  {
    auto s = root.child("mixture");
    s.read("sinr_db", cfg.mixture.sinr_db);
    if (auto r = s.numbers("train_sinr_range_db")) {
      require(r->size() == 2 && (*r)[0] <= (*r)[1], s, "train_sinr_range_db", "expected [low, high] with low <= high");
      cfg.mixture.train_sinr_range = std::pair{(*r)[0], (*r)[1]};
    }
    s.read("examples", cfg.mixture.examples);
    s.finish();
    require(std::isfinite(cfg.mixture.sinr_db), s, "sinr_db", "must be finite");
    require(cfg.mixture.examples > 0, s, "examples", "must be positive");
  }
  {
    auto s = root.child("lmmse");
    s.read("block_len", cfg.lmmse.block_len);
    s.read("examples", cfg.lmmse.examples);
    if (auto r = s.number("regularization")) cfg.lmmse.regularization = *r;
    s.finish();
    require(cfg.lmmse.block_len > 0, s, "block_len", "must be positive");
    require(cfg.lmmse.examples > 0, s, "examples", "must be positive");
    require(!cfg.lmmse.regularization || *cfg.lmmse.regularization >= 0, s, "regularization", "must be >= 0");
  }
  {
    auto s = root.child("model");
    s.read("kind", cfg.method);
    require(cfg.method == "unet" || cfg.method == "wavenet" || cfg.method == "lmmse", s, "kind",
            "must be one of unet, wavenet, lmmse (got '" + cfg.method + "')");
    if (cfg.method != "lmmse") cfg.model.kind = nn::parse_model_kind(cfg.method);
    if (auto v = s.uint("seed")) {
      cfg.model.seed = *v;
      cfg.model_seed_pinned_ = true;
    }
    auto u = s.child("unet");
    u.read("depth", cfg.model.unet.depth);
    u.read("base_channels", cfg.model.unet.base_channels);
    u.read("first_kernel", cfg.model.unet.first_kernel);
    u.read("inner_kernel", cfg.model.unet.inner_kernel);
    u.read("downsample", cfg.model.unet.downsample);
    u.finish();
    require(cfg.model.unet.base_channels > 0, u, "base_channels", "must be positive");
    require(cfg.model.unet.first_kernel % 2 == 1, u, "first_kernel", "must be odd");
    require(cfg.model.unet.inner_kernel % 2 == 1, u, "inner_kernel", "must be odd");
    require(cfg.model.unet.downsample >= 2, u, "downsample", "must be at least 2");
    auto w = s.child("wavenet");
    w.read("residual_blocks", cfg.model.wavenet.residual_blocks);
    w.read("dilation_cycle", cfg.model.wavenet.dilation_cycle);
    w.read("channels", cfg.model.wavenet.channels);
    w.read("kernel", cfg.model.wavenet.kernel);
    w.finish();
    require(cfg.model.wavenet.residual_blocks > 0, w, "residual_blocks", "must be positive");
    require(cfg.model.wavenet.dilation_cycle > 0 && cfg.model.wavenet.dilation_cycle < 30, w, "dilation_cycle",
            "must be in [1, 29]");
    require(cfg.model.wavenet.channels > 0, w, "channels", "must be positive");
    require(cfg.model.wavenet.kernel % 2 == 1, w, "kernel", "must be odd");
    s.finish();
  }
  {
    auto s = root.child("train");
    auto& t = cfg.train;
    s.read("learning_rate", t.learning_rate);
    s.read("batch_size", t.batch_size);
    s.read("max_steps", t.max_steps);
    s.read("eval_every", t.eval_every);
    s.read("patience", t.patience);
    s.read("min_improvement", t.min_improvement);
    s.read("validation_examples", t.validation_examples);
    s.read("augment", t.augment);
    s.read("final_lr_fraction", t.final_lr_fraction);
    if (auto v = s.uint("seed")) {
      t.seed = *v;
      cfg.train_seed_pinned_ = true;
    }
    s.finish();
    require(t.learning_rate > 0, s, "learning_rate", "must be positive");
    require(t.batch_size > 0, s, "batch_size", "must be positive");
    require(t.max_steps > 0, s, "max_steps", "must be positive");
    require(t.eval_every > 0, s, "eval_every", "must be positive");
    require(t.patience > 0, s, "patience", "must be positive");
    require(t.min_improvement >= 0, s, "min_improvement", "must be >= 0");
    require(t.validation_examples > 0, s, "validation_examples", "must be positive");
    require(t.final_lr_fraction > 0 && t.final_lr_fraction <= 1, s, "final_lr_fraction", "must be in (0, 1]");
  }
  {
    auto s = root.child("sweep");
    if (auto grid = s.numbers("sinr_db")) {
      require(!grid->empty(), s, "sinr_db", "must not be empty");
      cfg.sweep.sinr_db = *grid;
    }
    s.read("trials", cfg.sweep.trials);
    s.finish();
    require(cfg.sweep.trials > 0, s, "trials", "must be positive");
  }
  root.finish();
  cfg.set_seed(seed);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const io::FormatError& e) {
    throw ConfigError(e.what());
  }
  auto cfg = parse_config(text, path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["soi"] = {{"kind", to_string(cfg.soi.kind)},   {"length", cfg.soi.length}, {"oversampling", cfg.soi.oversampling},
              {"rolloff", cfg.soi.rolloff},        {"span", cfg.soi.span},     {"offset", cfg.soi.offset}};
  const auto& i = cfg.interference;
  j["interference"] = {{"kind", i.kind},
                       {"period", i.period},
                       {"burst_len", i.burst_len},
                       {"duty_cycle", i.duty_cycle},
                       {"frame_len", i.frame_len},
                       {"num_frames", i.num_frames},
                       {"train_fraction", i.train_fraction},
                       {"recenter", i.recenter},
                       {"seed", i.seed}};
  if (!i.path.empty()) j["interference"]["path"] = i.path.generic_string();
  j["mixture"] = {{"sinr_db", cfg.mixture.sinr_db}, {"examples", cfg.mixture.examples}};
  if (cfg.mixture.train_sinr_range)
    j["mixture"]["train_sinr_range_db"] = {cfg.mixture.train_sinr_range->first, cfg.mixture.train_sinr_range->second};
  j["lmmse"] = {{"block_len", cfg.lmmse.block_len}, {"examples", cfg.lmmse.examples}};
  if (cfg.lmmse.regularization) j["lmmse"]["regularization"] = *cfg.lmmse.regularization;
  j["model"] = io::to_json(cfg.model);
  j["model"]["kind"] = cfg.method;
  const auto& t = cfg.train;
  j["train"] = {{"learning_rate", t.learning_rate},
                {"batch_size", t.batch_size},
                {"max_steps", t.max_steps},
                {"eval_every", t.eval_every},
                {"patience", t.patience},
                {"min_improvement", t.min_improvement},
                {"validation_examples", t.validation_examples},
                {"augment", t.augment},
                {"final_lr_fraction", t.final_lr_fraction},
                {"seed", t.seed}};
  j["sweep"] = {{"sinr_db", cfg.sweep.sinr_db}, {"trials", cfg.sweep.trials}};
  return j;
}

SoiModel build_soi(const SoiSettings& s) {
  SoiModel m;
  m.kind = s.kind;
  m.qpsk.oversampling = s.oversampling;
  m.qpsk.offset = s.offset;
  m.qpsk.pulse = rrc_pulse(s.oversampling, s.rolloff, s.span);
  m.qpsk.length = s.length;
  m.qpsk.validate();
  if (s.kind == SoiKind::ofdm_qpsk) m.ofdm = default_ofdm_config(s.length);
  return m;
}

fs::path resolve_data_path(const fs::path& p, const fs::path& base_dir) {
  if (p.is_absolute()) return p;
  const fs::path local = base_dir.empty() ? p : base_dir / p;
  if (fs::exists(local)) return local;
  if (fs::exists(p)) return p;
  if (const char* root = std::getenv("RFSEP_DATA_DIR"); root && *root) {
    const fs::path candidate = fs::path(root) / p;
    if (fs::exists(candidate)) return candidate;
  }
  return local;
}

std::shared_ptr<const InterferenceDataset> build_interference_dataset(const InterferenceSettings& s,
                                                                      const fs::path& base_dir) {
  if (s.kind == "awgn") return nullptr;
  if (s.kind == "file") {
    const auto path = resolve_data_path(s.path, base_dir);
    auto file = io::read_frame_file(path);
    if (file.frames.size() < 2)
      throw ParameterError(path.string() + ": need at least 2 frames for a train/test split");
    std::vector<InterferenceFrame> frames;
    for (std::size_t f = 0; f < file.frames.size(); ++f) {
      InterferenceFrame frame{std::move(file.frames[f]), path.stem().string(), f};
      normalize_unit_power(frame.samples);
      frames.push_back(std::move(frame));
    }
    return std::make_shared<InterferenceDataset>(split_dataset(std::move(frames), s.train_fraction, s.seed));
  }
  SyntheticSourceSpec spec;
  spec.kind = s.kind;
  spec.period = s.period;
  spec.burst_len = s.burst_len;
  spec.duty_cycle = s.duty_cycle;
  spec.frame_len = s.frame_len;
  spec.num_frames = s.num_frames;
  spec.train_fraction = s.train_fraction;
  spec.seed = s.seed;
  return std::make_shared<InterferenceDataset>(make_synthetic_dataset(spec));
}

std::shared_ptr<const InterferenceSource> build_source(const InterferenceSettings& s, Split split,
                                                       const fs::path& base_dir) {
  if (s.kind == "awgn") return std::make_shared<AwgnSource>();
  return std::make_shared<DatasetSource>(build_interference_dataset(s, base_dir), split, s.kind, s.recenter);
}

}  // namespace rfsep
