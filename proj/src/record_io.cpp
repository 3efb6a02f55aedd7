#include "ticketlab/record_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ticketlab/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace ticketlab::io {

std::uint64_t fingerprint64(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::uint8_t c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string fingerprint_hex(const std::vector<std::uint8_t>& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fingerprint64(bytes)));
  return buf;
}

namespace {

class ByteWriter {
 public:
  std::vector<std::uint8_t> bytes;

  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& b) : b_(b) {}

  std::size_t offset() const { return off_; }

  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, b_.data() + off_, n);
    off_ += n;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b_[off_ + i]) << (8 * i);
    off_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b_[off_ + i]) << (8 * i);
    off_ += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + off_), n);
    off_ += n;
    return s;
  }
  void expect_end() const {
    if (off_ != b_.size())
      throw ParseError(off_, "trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    if (off_ + n > b_.size())
      throw ParseError(b_.size(), "truncated payload, wanted " + std::to_string(n) +
                                      " more bytes at offset " + std::to_string(off_));
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t off_ = 0;
};

constexpr std::uint32_t kMaskVersion = 1;
constexpr std::uint32_t kWeightsVersion = 1;
constexpr std::uint32_t kTensorVersion = 1;

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write on " + path);
}

}  // namespace

std::vector<std::uint8_t> encode_mask(const Mask& mask,
                                      const std::vector<std::string>& layer_names) {
  if (!layer_names.empty() && layer_names.size() != mask.layers.size())
    throw std::invalid_argument("layer name count mismatch");
  ByteWriter w;
  w.raw("TCKT", 4);
  w.u32(kMaskVersion);
  w.u32(static_cast<std::uint32_t>(mask.layers.size()));
  for (std::size_t l = 0; l < mask.layers.size(); ++l) {
    const MaskLayer& ml = mask.layers[l];
    w.str(layer_names.empty() ? "layer" + std::to_string(l) : layer_names[l]);
    w.u32(1);  // flat bit vectors carry a single dimension
    w.u64(ml.bits);
    w.u64(ml.popcount());
    std::size_t nbytes = (ml.bits + 7) / 8;
    for (std::size_t i = 0; i < nbytes; ++i) {
      std::uint8_t byte = 0;
      for (std::size_t bit = 0; bit < 8; ++bit) {
        std::size_t pos = i * 8 + bit;
        if (pos < ml.bits && ml.get(pos)) byte |= std::uint8_t(1u << bit);
      }
      w.bytes.push_back(byte);
    }
  }
  return w.bytes;
}

Mask decode_mask(const std::vector<std::uint8_t>& bytes, std::vector<std::string>* layer_names) {
  ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "TCKT", 4) != 0)
    throw ParseError(0, "bad mask magic: expected \"TCKT\"");
  std::uint32_t version = r.u32();
  if (version != kMaskVersion)
    throw ParseError(4, "unsupported mask version " + std::to_string(version));
  std::uint32_t layers = r.u32();
  Mask m;
  if (layer_names) layer_names->clear();
  for (std::uint32_t l = 0; l < layers; ++l) {
    std::string name = r.str();
    if (layer_names) layer_names->push_back(name);
    std::uint32_t dims = r.u32();
    std::size_t bits = 1;
    for (std::uint32_t d = 0; d < dims; ++d) bits *= r.u64();
    std::uint64_t tau = r.u64();
    MaskLayer ml(bits);
    std::size_t nbytes = (bits + 7) / 8;
    std::size_t payload_at = r.offset();
    std::vector<std::uint8_t> packed(nbytes);
    r.raw(packed.data(), nbytes);
    for (std::size_t i = 0; i < bits; ++i)
      if ((packed[i / 8] >> (i % 8)) & 1u) ml.set(i, true);
    if (ml.popcount() != tau)
      throw ParseError(payload_at, "mask layer \"" + name + "\": popcount " +
                                       std::to_string(ml.popcount()) +
                                       " != recorded tau " + std::to_string(tau));
    m.layers.push_back(std::move(ml));
  }
  r.expect_end();
  return m;
}

void write_mask(const std::string& path, const Mask& mask,
                const std::vector<std::string>& layer_names) {
  write_bytes(path, encode_mask(mask, layer_names));
}

Mask read_mask(const std::string& path, std::vector<std::string>* layer_names) {
  return decode_mask(read_file_bytes(path), layer_names);
}

std::vector<std::uint8_t> encode_weights(const Weights& w) {
  ByteWriter b;
  b.raw("WGT1", 4);
  b.u32(kWeightsVersion);
  b.u32(static_cast<std::uint32_t>(w.w.size()));
  for (std::size_t l = 0; l < w.w.size(); ++l) {
    const Tensor& t = w.w[l];
    b.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) b.u64(d);
    for (double v : t.data) b.f64(v);
    b.u64(w.b[l].size());
    for (double v : w.b[l]) b.f64(v);
  }
  return b.bytes;
}

Weights decode_weights(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "WGT1", 4) != 0) throw ParseError(0, "bad weights magic");
  if (r.u32() != kWeightsVersion) throw ParseError(4, "unsupported weights version");
  std::uint32_t layers = r.u32();
  Weights w;
  for (std::uint32_t l = 0; l < layers; ++l) {
    std::uint32_t dims = r.u32();
    std::vector<std::size_t> shape(dims);
    for (auto& d : shape) d = r.u64();
    Tensor t(shape);
    for (double& v : t.data) v = r.f64();
    w.w.push_back(std::move(t));
    std::uint64_t bn = r.u64();
    std::vector<double> bias(bn);
    for (double& v : bias) v = r.f64();
    w.b.push_back(std::move(bias));
  }
  r.expect_end();
  return w;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  ByteWriter b;
  b.raw("TSR1", 4);
  b.u32(kTensorVersion);
  b.u32(static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t d : t.shape) b.u64(d);
  for (double v : t.data) b.f64(v);
  return b.bytes;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, "TSR1", 4) != 0) throw ParseError(0, "bad tensor magic");
  if (r.u32() != kTensorVersion) throw ParseError(4, "unsupported tensor version");
  std::uint32_t dims = r.u32();
  std::vector<std::size_t> shape(dims);
  for (auto& d : shape) d = r.u64();
  Tensor t(shape);
  for (double& v : t.data) v = r.f64();
  r.expect_end();
  return t;
}

namespace {

std::string store_blob(const fs::path& blob_dir, const std::vector<std::uint8_t>& bytes) {
  std::string hash = fingerprint_hex(bytes);
  fs::path path = blob_dir / (hash + ".bin");
  if (!fs::exists(path)) write_bytes(path.string(), bytes);
  return hash;
}

std::vector<std::uint8_t> load_blob(const fs::path& blob_dir, const std::string& hash) {
  fs::path path = blob_dir / (hash + ".bin");
  std::vector<std::uint8_t> bytes = read_file_bytes(path.string());
  std::string actual = fingerprint_hex(bytes);
  if (actual != hash)
    throw std::runtime_error("blob hash mismatch for " + path.string() + ": manifest says " +
                             hash + ", content is " + actual);
  return bytes;
}

}  // namespace

void write_run_record(const std::string& dir, const RunRecord& rec) {
  fs::path root(dir);
  fs::path blobs = root / "blobs";
  fs::create_directories(blobs);

  ordered_json m;
  m["format"] = "ticketlab-run";
  m["version"] = 1;
  m["seed"] = rec.seed;
  m["run"] = rec.run_id;
  m["regime"] = rec.regime;
  m["task"] = rec.task;
  m["schedule_pct"] = rec.schedule_pct;
  m["dense_accuracy"] = rec.dense_accuracy;
  m["init_weights"] = store_blob(blobs, encode_weights(rec.init));
  ordered_json steps = ordered_json::array();
  for (std::size_t s = 0; s < rec.steps.size(); ++s) {
    ordered_json js;
    js["pruned_pct"] = rec.schedule_pct[s];
    js["accuracy"] = rec.steps[s].accuracy;
    js["mask"] = store_blob(blobs, encode_mask(rec.steps[s].mask, {}));
    if (s < rec.rank_correlations.size()) {
      ordered_json rho = ordered_json::array();
      for (double v : rec.rank_correlations[s]) {
        if (std::isnan(v))
          rho.push_back(nullptr);
        else
          rho.push_back(v);
      }
      js["rank_correlation"] = rho;
    }
    steps.push_back(js);
  }
  m["steps"] = steps;
  m["probe_outputs"] = store_blob(blobs, encode_tensor(rec.probe_outputs));

  std::ofstream f(root / "manifest.json", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write manifest in " + dir);
  f << m.dump(2) << "\n";
}

RunRecord read_run_record(const std::string& dir) {
  fs::path root(dir);
  std::ifstream f(root / "manifest.json");
  if (!f) throw std::runtime_error("cannot open manifest in " + dir);
  ordered_json m = ordered_json::parse(f);
  if (m.value("format", "") != "ticketlab-run")
    throw std::runtime_error(dir + ": not a run manifest");
  if (m.value("version", 0) != 1)
    throw std::runtime_error(dir + ": unsupported manifest version");

  fs::path blobs = root / "blobs";
  RunRecord rec;
  rec.seed = m.at("seed").get<std::uint64_t>();
  rec.run_id = m.at("run").get<std::uint64_t>();
  rec.regime = m.value("regime", "");
  rec.task = m.value("task", "");
  rec.schedule_pct = m.at("schedule_pct").get<std::vector<double>>();
  rec.dense_accuracy = m.at("dense_accuracy").get<double>();
  rec.init = decode_weights(load_blob(blobs, m.at("init_weights").get<std::string>()));
  for (const auto& js : m.at("steps")) {
    StepResult sr;
    sr.accuracy = js.at("accuracy").get<double>();
    sr.mask = decode_mask(load_blob(blobs, js.at("mask").get<std::string>()));
    rec.steps.push_back(std::move(sr));
    if (js.contains("rank_correlation")) {
      std::vector<double> rho;
      for (const auto& v : js.at("rank_correlation"))
        rho.push_back(v.is_null() ? std::nan("") : v.get<double>());
      rec.rank_correlations.push_back(std::move(rho));
    }
  }
  rec.probe_outputs = decode_tensor(load_blob(blobs, m.at("probe_outputs").get<std::string>()));
  return rec;
}

std::string record_dir(const std::string& root, std::uint64_t seed, std::uint64_t run) {
  return (fs::path(root) / ("s" + std::to_string(seed) + "_r" + std::to_string(run))).string();
}

void write_records(const std::string& root, const std::vector<RunRecord>& records) {
  for (const RunRecord& rec : records)
    write_run_record(record_dir(root, rec.seed, rec.run_id), rec);
}

std::vector<RunRecord> read_records(const std::string& root) {
  std::vector<std::string> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "manifest.json"))
      dirs.push_back(e.path().string());
  std::sort(dirs.begin(), dirs.end());
  std::vector<RunRecord> recs;
  for (const auto& d : dirs) recs.push_back(read_run_record(d));
  return recs;
}

}  // namespace ticketlab::io
