#include "rfsep/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rfsep::io {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class U>
void put_le(std::vector<std::byte>& out, U value) {
  static_assert(std::is_integral_v<U>);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
}

template <class U>
U get_le(const std::byte* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(std::to_integer<unsigned>(p[i])) << (8 * i);
  return v;
}

void put_f32(std::vector<std::byte>& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::vector<std::byte>& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
float get_f32(const std::byte* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }
double get_f64(const std::byte* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

std::vector<std::byte> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> data(size);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!in) throw FormatError("short read on " + path.string());
  return data;
}

void write_all(const fs::path& path, const std::vector<std::byte>& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw FormatError("write failed on " + path.string());
}

FrameFileHeader parse_header(const std::vector<std::byte>& data, const fs::path& path) {
  if (data.size() < kFrameHeaderBytes) throw FormatError(path.string() + ": file shorter than the 24-byte header");
  if (std::memcmp(data.data(), kFrameMagic, 4) != 0) throw FormatError(path.string() + ": bad magic (expected RFCH)");
  FrameFileHeader h;
  h.version = get_le<std::uint32_t>(data.data() + 4);
  h.frame_len = get_le<std::uint64_t>(data.data() + 8);
  h.num_frames = get_le<std::uint64_t>(data.data() + 16);
  if (h.version != kFrameVersion)
    throw FormatError(path.string() + ": unsupported frame file version " + std::to_string(h.version));
  const std::uint64_t expected = kFrameHeaderBytes + h.num_frames * h.frame_len * 8;
  if (data.size() != expected)
    throw FormatError(path.string() + ": size " + std::to_string(data.size()) + " does not match header (expected " +
                      std::to_string(expected) + ")");
  return h;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw FormatError("not a number: '" + std::string(s) + "'");
  return v;
}

namespace {

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw FormatError("not an unsigned integer: '" + std::string(s) + "'");
  return v;
}

}  // namespace

void write_frame_file(const fs::path& path, const std::vector<ComplexSignal>& frames) {
  const std::size_t frame_len = frames.empty() ? 0 : frames.front().size();
  std::vector<std::byte> out;
  out.reserve(kFrameHeaderBytes + frames.size() * frame_len * 8);
  for (char c : kFrameMagic) out.push_back(static_cast<std::byte>(c));
  put_le(out, kFrameVersion);
  put_le(out, static_cast<std::uint64_t>(frame_len));
  put_le(out, static_cast<std::uint64_t>(frames.size()));
  for (const auto& f : frames) {
    if (f.size() != frame_len) throw ParameterError("all frames in a frame file must have the same length");
    for (const auto& v : f) {
      put_f32(out, static_cast<float>(v.real()));
      put_f32(out, static_cast<float>(v.imag()));
    }
  }
  write_all(path, out);
}

FrameFileHeader read_frame_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::byte> head(kFrameHeaderBytes);
  in.read(reinterpret_cast<char*>(head.data()), kFrameHeaderBytes);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (size < kFrameHeaderBytes) throw FormatError(path.string() + ": file shorter than the 24-byte header");
  if (std::memcmp(head.data(), kFrameMagic, 4) != 0) throw FormatError(path.string() + ": bad magic (expected RFCH)");
  FrameFileHeader h;
  h.version = get_le<std::uint32_t>(head.data() + 4);
  h.frame_len = get_le<std::uint64_t>(head.data() + 8);
  h.num_frames = get_le<std::uint64_t>(head.data() + 16);
  if (size != kFrameHeaderBytes + h.num_frames * h.frame_len * 8)
    throw FormatError(path.string() + ": size does not match header");
  return h;
}

FrameFile read_frame_file(const fs::path& path) {
  const auto data = read_all(path);
  FrameFile f;
  f.header = parse_header(data, path);
  const std::byte* p = data.data() + kFrameHeaderBytes;
  f.frames.resize(f.header.num_frames);
  for (auto& frame : f.frames) {
    frame.resize(f.header.frame_len);
    for (auto& v : frame) {
      v = {get_f32(p), get_f32(p + 4)};
      p += 8;
    }
  }
  return f;
}

std::vector<cdouble> read_raw_iq(const fs::path& path, std::size_t keep_multiple, bool drop_partial) {
  const auto data = read_all(path);
  const std::size_t unit = 8 * std::max<std::size_t>(keep_multiple, 1);
  if (data.size() % unit != 0 && !drop_partial)
    throw FormatError(path.string() + ": raw IQ size " + std::to_string(data.size()) + " bytes is not a multiple of " +
                      std::to_string(unit) + " bytes");
  std::vector<cdouble> out(data.size() / unit * unit / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {get_f32(data.data() + 8 * i), get_f32(data.data() + 8 * i + 4)};
  return out;
}

void write_raw_iq(const fs::path& path, const std::vector<cdouble>& samples) {
  std::vector<std::byte> out;
  out.reserve(samples.size() * 8);
  for (const auto& v : samples) {
    put_f32(out, static_cast<float>(v.real()));
    put_f32(out, static_cast<float>(v.imag()));
  }
  write_all(path, out);
}

void write_bits(const fs::path& path, const std::vector<BitStream>& streams) {
  std::vector<std::byte> out;
  for (const auto& s : streams)
    for (auto b : s) out.push_back(static_cast<std::byte>(b));
  write_all(path, out);
}

std::vector<BitStream> read_bits(const fs::path& path, std::size_t per_stream) {
  const auto data = read_all(path);
  if (per_stream == 0 || data.size() % per_stream != 0)
    throw FormatError(path.string() + ": bit file size is not a multiple of " + std::to_string(per_stream));
  std::vector<BitStream> out(data.size() / per_stream);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].resize(per_stream);
    for (std::size_t k = 0; k < per_stream; ++k) {
      const auto v = std::to_integer<std::uint8_t>(data[i * per_stream + k]);
      if (v > 1) throw FormatError(path.string() + ": bit value out of range");
      out[i][k] = v;
    }
  }
  return out;
}

template <class T>
StoredTensor StoredTensor::from(const std::string& name, const nn::Tensor<T>& t) {
  StoredTensor s;
  s.name = name;
  s.shape = t.shape;
  s.scalar_bytes = sizeof(T);
  s.bytes.reserve(t.size() * sizeof(T));
  for (T v : t.data) {
    if constexpr (sizeof(T) == 4) put_f32(s.bytes, v);
    else put_f64(s.bytes, v);
  }
  return s;
}

template <class T>
nn::Tensor<T> StoredTensor::to() const {
  nn::Tensor<T> t(shape);
  if (bytes.size() != t.size() * scalar_bytes)
    throw FormatError("tensor '" + name + "' byte count does not match its shape");
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::byte* p = bytes.data() + i * scalar_bytes;
    t.data[i] = scalar_bytes == 4 ? static_cast<T>(get_f32(p)) : static_cast<T>(get_f64(p));
  }
  return t;
}

const StoredTensor& WeightContainer::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw FormatError("weight container has no tensor '" + name + "'");
}

void save_weights(const fs::path& manifest_path, const WeightContainer& container) {
  fs::path blob_path = manifest_path;
  blob_path.replace_extension(".bin");
  json manifest;
  manifest["format"] = "rfsep-weights";
  manifest["version"] = 1;
  manifest["blob"] = blob_path.filename().string();
  manifest["metadata"] = container.metadata;
  manifest["tensors"] = json::array();
  std::vector<std::byte> blob;
  for (const auto& t : container.tensors) {
    if (t.scalar_bytes != 4 && t.scalar_bytes != 8) throw ParameterError("scalar width must be 4 or 8 bytes");
    manifest["tensors"].push_back(
        {{"name", t.name}, {"shape", t.shape}, {"scalar_bytes", t.scalar_bytes}, {"offset", blob.size()},
         {"bytes", t.bytes.size()}});
    blob.insert(blob.end(), t.bytes.begin(), t.bytes.end());
  }
  manifest["blob_bytes"] = blob.size();
  write_text(manifest_path, manifest.dump(2) + "\n");
  write_all(blob_path, blob);
}

WeightContainer load_weights(const fs::path& manifest_path) {
  json manifest;
  try {
    manifest = json::parse(read_text(manifest_path));
  } catch (const json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "rfsep-weights")
    throw FormatError(manifest_path.string() + ": not an rfsep weight manifest");
  const fs::path blob_path = manifest_path.parent_path() / manifest.at("blob").get<std::string>();
  const auto blob = read_all(blob_path);
  WeightContainer c;
  c.metadata = manifest.value("metadata", json::object());
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (const auto& e : manifest.at("tensors")) {
    StoredTensor t;
    t.name = e.at("name").get<std::string>();
    t.shape = e.at("shape").get<std::vector<std::size_t>>();
    t.scalar_bytes = e.at("scalar_bytes").get<std::size_t>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto count = nn::Tensor<float>::count(t.shape) * t.scalar_bytes;
    if (t.scalar_bytes != 4 && t.scalar_bytes != 8)
      throw FormatError(manifest_path.string() + ": tensor '" + t.name + "' has unsupported scalar width");
    if (offset + count > blob.size())
      throw FormatError(manifest_path.string() + ": tensor '" + t.name + "' extends past the blob");
    for (const auto& [lo, hi] : ranges)
      if (offset < hi && lo < offset + count)
        throw FormatError(manifest_path.string() + ": tensor '" + t.name + "' overlaps another tensor");
    ranges.emplace_back(offset, offset + count);
    t.bytes.assign(blob.begin() + static_cast<long>(offset), blob.begin() + static_cast<long>(offset + count));
    c.tensors.push_back(std::move(t));
  }
  return c;
}

json to_json(const nn::ModelSpec& spec) {
  return {{"kind", nn::to_string(spec.kind)},
          {"seed", spec.seed},
          {"unet",
           {{"depth", spec.unet.depth},
            {"base_channels", spec.unet.base_channels},
            {"first_kernel", spec.unet.first_kernel},
            {"inner_kernel", spec.unet.inner_kernel},
            {"downsample", spec.unet.downsample}}},
          {"wavenet",
           {{"residual_blocks", spec.wavenet.residual_blocks},
            {"dilation_cycle", spec.wavenet.dilation_cycle},
            {"channels", spec.wavenet.channels},
            {"kernel", spec.wavenet.kernel}}}};
}

nn::ModelSpec model_spec_from_json(const json& j) {
  nn::ModelSpec s;
  s.kind = nn::parse_model_kind(j.at("kind").get<std::string>());
  s.seed = j.value("seed", s.seed);
  if (j.contains("unet")) {
    const auto& u = j["unet"];
    s.unet.depth = u.value("depth", s.unet.depth);
    s.unet.base_channels = u.value("base_channels", s.unet.base_channels);
    s.unet.first_kernel = u.value("first_kernel", s.unet.first_kernel);
    s.unet.inner_kernel = u.value("inner_kernel", s.unet.inner_kernel);
    s.unet.downsample = u.value("downsample", s.unet.downsample);
  }
  if (j.contains("wavenet")) {
    const auto& w = j["wavenet"];
    s.wavenet.residual_blocks = w.value("residual_blocks", s.wavenet.residual_blocks);
    s.wavenet.dilation_cycle = w.value("dilation_cycle", s.wavenet.dilation_cycle);
    s.wavenet.channels = w.value("channels", s.wavenet.channels);
    s.wavenet.kernel = w.value("kernel", s.wavenet.kernel);
  }
  return s;
}

template <class T>
WeightContainer pack_model(const nn::SeparatorNet<T>& model) {
  WeightContainer c;
  c.metadata["kind"] = "model";
  c.metadata["model"] = to_json(model.spec());
  for (const auto& p : model.params()) c.tensors.push_back(StoredTensor::from(p.name, p.value));
  return c;
}

template <class T>
std::unique_ptr<nn::SeparatorNet<T>> unpack_model(const WeightContainer& container) {
  if (container.metadata.value("kind", "") != "model") throw FormatError("weight container does not hold a model");
  auto model = nn::make_model<T>(model_spec_from_json(container.metadata.at("model")));
  for (auto& p : model->params()) {
    auto t = container.find(p.name).template to<T>();
    if (t.shape != p.value.shape)
      throw FormatError("tensor '" + p.name + "' has shape " + nn::shape_string(t.shape) + ", model expects " +
                        nn::shape_string(p.value.shape));
    p.value = std::move(t);
  }
  return model;
}

namespace {

nn::Tensor<double> complex_matrix_tensor(const CMatrix& m) {
  nn::Tensor<double> t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), 2});
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      t.data[k++] = m(r, c).real();
      t.data[k++] = m(r, c).imag();
    }
  return t;
}

CMatrix tensor_complex_matrix(const nn::Tensor<double>& t) {
  if (t.rank() != 3 || t.shape[2] != 2) throw FormatError("complex matrix tensor must be R x C x 2");
  CMatrix m(static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1]));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c, k += 2) m(r, c) = {t.data[k], t.data[k + 1]};
  return m;
}

}  // namespace

WeightContainer pack_lmmse(const LmmseSeparator& sep) {
  WeightContainer c;
  c.metadata["kind"] = "lmmse";
  c.metadata["block_len"] = sep.block_len();
  c.metadata["regularization"] = sep.regularization();
  c.tensors.push_back(StoredTensor::from("css", complex_matrix_tensor(sep.css())));
  c.tensors.push_back(StoredTensor::from("cbb", complex_matrix_tensor(sep.cbb())));
  c.tensors.push_back(StoredTensor::from("gain", complex_matrix_tensor(sep.gain())));
  return c;
}

LmmseSeparator unpack_lmmse(const WeightContainer& container) {
  if (container.metadata.value("kind", "") != "lmmse")
    throw FormatError("weight container does not hold an LMMSE separator");
  return LmmseSeparator(tensor_complex_matrix(container.find("css").to<double>()),
                        tensor_complex_matrix(container.find("cbb").to<double>()),
                        container.metadata.at("regularization").get<double>());
}

std::string sweep_to_csv(const SweepResult& result) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& r : result.rows) {
    out += r.method + "," + format_double(r.sinr_db) + "," + format_double(r.mse_db) + "," + format_double(r.ber) +
           "," + std::to_string(r.trials) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

SweepResult sweep_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader)
    throw FormatError("sweep CSV must start with header '" + std::string(kSweepCsvHeader) + "'");
  SweepResult result;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      cols.push_back(line.substr(start, pos - start));
    cols.push_back(line.substr(start));
    if (cols.size() != 6) throw FormatError("sweep CSV line " + std::to_string(lineno) + ": expected 6 columns");
    SweepRow r;
    r.method = cols[0];
    r.sinr_db = parse_double(cols[1]);
    r.mse_db = parse_double(cols[2]);
    r.ber = parse_double(cols[3]);
    r.trials = parse_u64(cols[4]);
    r.seed = parse_u64(cols[5]);
    result.rows.push_back(std::move(r));
  }
  return result;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template StoredTensor StoredTensor::from(const std::string&, const nn::Tensor<float>&);
template StoredTensor StoredTensor::from(const std::string&, const nn::Tensor<double>&);
template nn::Tensor<float> StoredTensor::to() const;
template nn::Tensor<double> StoredTensor::to() const;
template WeightContainer pack_model(const nn::SeparatorNet<float>&);
template WeightContainer pack_model(const nn::SeparatorNet<double>&);
template std::unique_ptr<nn::SeparatorNet<float>> unpack_model(const WeightContainer&);
template std::unique_ptr<nn::SeparatorNet<double>> unpack_model(const WeightContainer&);

}  // namespace rfsep::io
