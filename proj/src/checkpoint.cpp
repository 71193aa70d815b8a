#include "tforge/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tforge/error.hpp"

namespace tforge {

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    out.append(b, sizeof(T));
  }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out += s;
  }
  std::string out;
};

class Reader {
 public:
  explicit Reader(const std::string& d) : data(d) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    char b[sizeof(T)];
    std::memcpy(b, data.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
  void need(std::size_t n) const {
    if (pos + n > data.size()) fail(ErrorCode::kParseError, "truncated checkpoint");
  }
  const std::string& data;
  std::size_t pos = 0;
};

}  // namespace

std::string encode_checkpoint(const FusionModel& model) {
  Writer w;
  w.out = "TFCK";
  w.put<std::uint32_t>(1);
  w.str(to_string(model.input.modality));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.input.downsample));
  w.str(model.size_tag);
  w.str(model.strategy().tag());
  const EncoderSpec& spec = model.spec();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.in_channels));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.head_hidden));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.stages.size()));
  for (const auto& s : spec.stages) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.kernel));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.stride));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.channels));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.act));
  }
  w.put<double>(model.normalizer.mean_mm);
  w.put<double>(model.normalizer.std_mm);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.stats.mean.size()));
  for (double v : model.stats.mean) w.put<double>(v);
  for (double v : model.stats.stddev) w.put<double>(v);
  const ParamStore& ps = model.params();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ps.count()));
  for (const auto& p : ps.params()) {
    w.str(p.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(p.value.shape.size()));
    for (int d : p.value.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  }
  w.put<std::uint64_t>(ps.scalar_count());
  for (const auto& p : ps.params())
    for (double v : p.value.data) w.put<double>(v);
  return w.out;
}

FusionModel decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  r.need(4);
  if (bytes.compare(0, 4, "TFCK") != 0) fail(ErrorCode::kParseError, "not a checkpoint (bad magic)");
  r.pos = 4;
  if (r.get<std::uint32_t>() != 1) fail(ErrorCode::kParseError, "unsupported checkpoint version");
  InputSpec input;
  input.modality = parse_modality(r.str());
  input.downsample = static_cast<int>(r.get<std::uint32_t>());
  const std::string size_tag = r.str();
  const FusionStrategy strategy = FusionStrategy::parse(r.str());
  EncoderSpec spec;
  spec.in_channels = static_cast<int>(r.get<std::uint32_t>());
  spec.head_hidden = static_cast<int>(r.get<std::uint32_t>());
  const auto n_stages = r.get<std::uint32_t>();
  if (n_stages > 64) fail(ErrorCode::kParseError, "implausible stage count");
  for (std::uint32_t i = 0; i < n_stages; ++i) {
    ConvStage s;
    s.kernel = static_cast<int>(r.get<std::uint32_t>());
    s.stride = static_cast<int>(r.get<std::uint32_t>());
    s.channels = static_cast<int>(r.get<std::uint32_t>());
    if (r.get<std::uint32_t>() != 0) fail(ErrorCode::kParseError, "unknown nonlinearity");
    spec.stages.push_back(s);
  }
  // Architecture first, so the parameter table can be checked against it.
  FusionModel model(spec, strategy, 0);
  model.input = input;
  model.size_tag = size_tag;
  model.normalizer.mean_mm = r.get<double>();
  model.normalizer.std_mm = r.get<double>();
  const auto nc = r.get<std::uint32_t>();
  if (static_cast<int>(nc) != channel_count(input.modality)) fail(ErrorCode::kParseError, "channel statistics size");
  model.stats.modality = input.modality;
  for (std::uint32_t c = 0; c < nc; ++c) model.stats.mean.push_back(r.get<double>());
  for (std::uint32_t c = 0; c < nc; ++c) model.stats.stddev.push_back(r.get<double>());
  ParamStore& ps = model.params();
  if (static_cast<int>(r.get<std::uint32_t>()) != ps.count()) fail(ErrorCode::kParseError, "tensor count mismatch");
  for (auto& p : ps.params()) {
    if (r.str() != p.name) fail(ErrorCode::kParseError, "unexpected tensor " + p.name);
    const auto rank = r.get<std::uint32_t>();
    std::vector<int> shape;
    for (std::uint32_t k = 0; k < rank && k < 8; ++k) shape.push_back(static_cast<int>(r.get<std::uint32_t>()));
    if (shape != p.value.shape) fail(ErrorCode::kParseError, "shape mismatch for " + p.name);
  }
  if (r.get<std::uint64_t>() != ps.scalar_count()) fail(ErrorCode::kParseError, "parameter count mismatch");
  for (auto& p : ps.params())
    for (auto& v : p.value.data) v = r.get<double>();
  if (r.pos != bytes.size()) fail(ErrorCode::kParseError, "trailing bytes in checkpoint");
  return model;
}

void save_checkpoint(const FusionModel& model, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

FusionModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace tforge
