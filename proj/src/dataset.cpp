#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "tforge/error.hpp"
#include "tforge/kv.hpp"
#include "tforge/rng.hpp"
#include "tforge/synthgen.hpp"

namespace tforge {

namespace fs = std::filesystem;

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  fail(ErrorCode::kParseError, "unknown split '" + s + "'");
}

std::vector<const ManifestEntry*> Manifest::split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest text: header `key = value` lines, then one `sample ...` line per
// per-eye sample.

std::string format_manifest(const Manifest& m) {
  std::ostringstream out;
  char buf[64];
  out << "# trace-forge dataset manifest\n";
  out << "format = " << m.format_version << "\n";
  out << "seed = " << m.seed << "\n";
  out << "n_scenes = " << m.n_scenes << "\n";
  out << "n_samples = " << m.entries.size() << "\n";
  out << "crop_size = " << m.crop_size << "\n";
  out << "channels = " << m.channels << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", m.mm_per_px);
  out << "mm_per_px = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", m.working_distance_mm);
  out << "working_distance_mm = " << buf << "\n";
  out << "# sample <id> <split> <eye> <scene> <blob> <trace> <rig>\n";
  for (const auto& e : m.entries)
    out << "sample " << e.sample_id << " " << to_string(e.split) << " " << to_string(e.eye) << " " << e.scene_index
        << " " << e.blob_path << " " << e.trace_path << " " << e.rig_path << "\n";
  return out.str();
}

Manifest parse_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line, header;
  std::vector<std::string> sample_lines;
  while (std::getline(in, line)) {
    if (line.rfind("sample ", 0) == 0)
      sample_lines.push_back(line);
    else
      header += line + "\n";
  }
  const KeyValues kv = KeyValues::parse(header);
  Manifest m;
  m.format_version = static_cast<int>(kv.number("format"));
  if (m.format_version != 1) fail(ErrorCode::kParseError, "unsupported manifest format");
  m.seed = std::stoull(kv.get("seed"));
  m.n_scenes = static_cast<int>(kv.number("n_scenes"));
  m.crop_size = static_cast<int>(kv.number("crop_size"));
  m.channels = static_cast<int>(kv.number("channels"));
  m.mm_per_px = kv.number("mm_per_px");
  m.working_distance_mm = kv.number("working_distance_mm");
  for (const auto& l : sample_lines) {
    std::istringstream ls(l);
    std::string tag, split, eye;
    ManifestEntry e;
    if (!(ls >> tag >> e.sample_id >> split >> eye >> e.scene_index >> e.blob_path >> e.trace_path >> e.rig_path))
      fail(ErrorCode::kParseError, "malformed manifest line: " + l);
    e.split = parse_split(split);
    e.eye = parse_eye(eye);
    m.entries.push_back(std::move(e));
  }
  if (m.entries.size() != static_cast<size_t>(kv.number("n_samples")))
    fail(ErrorCode::kCountMismatch, "manifest sample count does not match its header");
  return m;
}

Manifest read_manifest(const fs::path& dataset_dir) {
  std::ifstream in(dataset_dir / "manifest.txt", std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + (dataset_dir / "manifest.txt").string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

// ---------------------------------------------------------------------------
// Sample blobs

namespace {

constexpr char kBlobMagic[8] = {'T', 'F', 'S', 'M', 'P', 'L', '0', '1'};

template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) fail(ErrorCode::kParseError, "truncated sample blob");
    char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }
  std::string bytes(size_t n) {
    if (pos_ + n > data_.size()) fail(ErrorCode::kParseError, "truncated sample blob");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  size_t pos_ = 0;
};

bool u8_exact(const MultiViewSample& s) {
  for (const auto& v : s.views) {
    for (const auto& p : v.image)
      for (float x : p.data)
        if (static_cast<float>(std::round(x * 255.0) / 255.0) != x || x < 0.0f || x > 1.0f) return false;
    for (float x : v.depth.data)
      if (std::round(x) != x || x < 0.0f || x > 255.0f) return false;
  }
  return true;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace

void write_sample_blob(const MultiViewSample& sample, const fs::path& path) {
  const View& v0 = sample.views[0];
  const bool u8 = u8_exact(sample);
  std::string buf;
  buf.append(kBlobMagic, 8);
  put<std::uint32_t>(buf, 1);
  put<std::uint32_t>(buf, 4);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(v0.height()));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(v0.width()));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(v0.channels()));
  put<std::uint8_t>(buf, u8 ? 0 : 1);
  put<std::uint8_t>(buf, sample.eye == Eye::kLeft ? 0 : 1);
  put<std::uint16_t>(buf, 0);
  put<std::uint64_t>(buf, sample.rng_seed);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(sample.sample_id.size()));
  buf += sample.sample_id;
  for (const auto& v : sample.views) {
    if (v.width() != v0.width() || v.height() != v0.height() || v.channels() != v0.channels())
      fail(ErrorCode::kShapeMismatch, "views differ in shape");
    auto plane = [&](const ImageF& p, double scale) {
      for (float x : p.data) {
        if (u8)
          put<std::uint8_t>(buf, static_cast<std::uint8_t>(std::lround(x * scale)));
        else
          put<float>(buf, x);
      }
    };
    for (const auto& p : v.image) plane(p, 255.0);
    plane(v.depth, 1.0);
    buf.append(reinterpret_cast<const char*>(v.mask.data.data()), v.mask.data.size());
  }
  write_file(path, buf);
}

MultiViewSample read_sample_blob(const fs::path& path) {
  Reader r(read_file(path));
  if (r.bytes(8) != std::string(kBlobMagic, 8)) fail(ErrorCode::kParseError, "not a sample blob: " + path.string());
  if (r.get<std::uint32_t>() != 1) fail(ErrorCode::kParseError, "unsupported blob version");
  if (r.get<std::uint32_t>() != 4) fail(ErrorCode::kParseError, "blob must hold 4 views");
  const int h = static_cast<int>(r.get<std::uint32_t>());
  const int w = static_cast<int>(r.get<std::uint32_t>());
  const int ch = static_cast<int>(r.get<std::uint32_t>());
  const auto enc = r.get<std::uint8_t>();
  if (enc > 1 || (ch != 1 && ch != 3)) fail(ErrorCode::kParseError, "bad blob header");
  MultiViewSample s;
  s.eye = r.get<std::uint8_t>() == 0 ? Eye::kLeft : Eye::kRight;
  r.get<std::uint16_t>();
  s.rng_seed = r.get<std::uint64_t>();
  s.sample_id = r.bytes(r.get<std::uint32_t>());
  for (auto& v : s.views) {
    auto plane = [&](double scale) {
      ImageF p(w, h);
      for (auto& x : p.data) x = enc == 0 ? static_cast<float>(r.get<std::uint8_t>() / scale) : r.get<float>();
      return p;
    };
    for (int c = 0; c < ch; ++c) v.image.push_back(plane(255.0));
    v.depth = plane(1.0);
    v.mask = Mask(w, h);
    const std::string m = r.bytes(v.mask.data.size());
    std::memcpy(v.mask.data.data(), m.data(), m.size());
  }
  if (!r.done()) fail(ErrorCode::kParseError, "trailing bytes in sample blob");
  return s;
}

MultiViewSample load_sample(const fs::path& dir, const ManifestEntry& e) {
  MultiViewSample s = read_sample_blob(dir / e.blob_path);
  s.truth = read_trace(dir / e.trace_path);
  s.rig = load_rig(dir / e.rig_path);
  s.mm_per_px = s.rig.working_distance_mm / s.rig.cameras[0].focal_px;
  if (s.truth.eye != s.eye || s.eye != e.eye) fail(ErrorCode::kParseError, "eye tag mismatch for " + e.sample_id);
  return s;
}

// ---------------------------------------------------------------------------
// PGM masks

void write_mask_pgm(const Mask& mask, const fs::path& path) {
  std::string buf = "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
  for (auto v : mask.data) buf.push_back(static_cast<char>(v ? 255 : 0));
  write_file(path, buf);
}

Mask read_mask_pgm(const fs::path& path) {
  const std::string data = read_file(path);
  std::istringstream in(data);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  if (!(in >> magic >> w >> h >> maxv) || magic != "P5" || w <= 0 || h <= 0 || maxv != 255)
    fail(ErrorCode::kParseError, "unsupported PGM: " + path.string());
  in.get();
  const auto offset = static_cast<size_t>(in.tellg());
  if (data.size() != offset + static_cast<size_t>(w) * h) fail(ErrorCode::kParseError, "PGM size mismatch: " + path.string());
  Mask m(w, h);
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = static_cast<unsigned char>(data[offset + i]) >= 128 ? 1 : 0;
  return m;
}

// ---------------------------------------------------------------------------
// Dataset generation

Manifest build_dataset(int n_scenes, std::uint64_t seed, const fs::path& out_dir, const DatasetConfig& cfg) {
  if (n_scenes < 10) fail(ErrorCode::kInvalidArgument, "a dataset needs at least 10 scenes");
  std::error_code ec;
  fs::create_directories(out_dir / "samples", ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + (out_dir / "samples").string() + ": " + ec.message());

  const CameraRig rig = default_rig(cfg.rig);
  SceneConfig scfg = cfg.scene;
  scfg.crop_size_px = cfg.render.crop_size;

  // Split by scene so both eyes of one capture land in the same split.
  std::vector<int> order(static_cast<size_t>(n_scenes));
  for (int i = 0; i < n_scenes; ++i) order[i] = i;
  Rng split_rng(derive_seed(seed, 0xC0FFEEull));
  split_rng.shuffle(order);
  const int n_train = static_cast<int>(std::lround(cfg.train_fraction * n_scenes));
  const int n_val = static_cast<int>(std::lround(cfg.val_fraction * n_scenes));
  std::vector<Split> scene_split(static_cast<size_t>(n_scenes));
  for (int k = 0; k < n_scenes; ++k)
    scene_split[order[k]] = k < n_train ? Split::kTrain : (k < n_train + n_val ? Split::kVal : Split::kTest);

  std::vector<std::array<ManifestEntry, 2>> entries(static_cast<size_t>(n_scenes));
  std::vector<std::string> errors(static_cast<size_t>(n_scenes));

  auto work = [&](int scene) {
    try {
      const std::uint64_t scene_seed = derive_seed(seed, static_cast<std::uint64_t>(scene) + 1);
      std::pair<MultiViewSample, MultiViewSample> eyes;
      bool ok = false;
      for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        try {
          const Scene sc = sample_scene(derive_seed(scene_seed, static_cast<std::uint64_t>(attempt)), rig, scfg);
          eyes = render_eye_pair(sc, rig, cfg.render, scene_seed);
          ok = true;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kOutOfFrustum && e.code() != ErrorCode::kOverlapError) throw;
        }
      }
      if (!ok) fail(ErrorCode::kGenerationFailed, "scene " + std::to_string(scene) + ": 100 rejected layouts");
      char id[32];
      int slot = 0;
      for (MultiViewSample* s : {&eyes.first, &eyes.second}) {
        std::snprintf(id, sizeof id, "s%05d_%s", scene, to_string(s->eye).c_str());
        s->sample_id = id;
        ManifestEntry e;
        e.sample_id = id;
        e.split = scene_split[scene];
        e.eye = s->eye;
        e.scene_index = scene;
        e.blob_path = "samples/" + std::string(id) + ".tfs";
        e.trace_path = "samples/" + std::string(id) + ".trace";
        e.rig_path = "samples/" + std::string(id) + ".rig";
        write_sample_blob(*s, out_dir / e.blob_path);
        write_trace(s->truth, out_dir / e.trace_path);
        save_rig(s->rig, out_dir / e.rig_path);
        entries[scene][slot++] = std::move(e);
      }
    } catch (const std::exception& e) {
      errors[scene] = e.what();
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    for (int i = 0; i < n_scenes; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&, j] {
        for (int i = j; i < n_scenes; i += jobs) work(i);
      });
    for (auto& t : pool) t.join();
  }
  for (int i = 0; i < n_scenes; ++i)
    if (!errors[i].empty()) fail(ErrorCode::kIoError, "scene " + std::to_string(i) + ": " + errors[i]);

  Manifest m;
  m.seed = seed;
  m.n_scenes = n_scenes;
  m.crop_size = cfg.render.crop_size;
  m.channels = cfg.render.channels;
  m.mm_per_px = rig.working_distance_mm / rig.cameras[0].focal_px;
  m.working_distance_mm = rig.working_distance_mm;
  for (auto& pair : entries)
    for (auto& e : pair) m.entries.push_back(std::move(e));
  write_file(out_dir / "manifest.txt", format_manifest(m));
  return m;
}

}  // namespace tforge
