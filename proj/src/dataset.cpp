#include "ticketlab/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ticketlab {

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  if (off + 4 > b.size())
    throw ParseError(b.size(), "truncated header, expected 4 bytes at offset " +
                                   std::to_string(off));
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

Tensor parse_idx_images(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t magic = read_be32(bytes, 0);
  if (magic != 0x00000803u)
    throw ParseError(0, "bad IDX image magic: expected 0x00000803, got " + hex32(magic));
  std::uint32_t count = read_be32(bytes, 4);
  std::uint32_t rows = read_be32(bytes, 8);
  std::uint32_t cols = read_be32(bytes, 12);
  std::size_t need = 16 + std::size_t(count) * rows * cols;
  if (bytes.size() < need)
    throw ParseError(bytes.size(), "truncated IDX image payload: need " +
                                       std::to_string(need) + " bytes, have " +
                                       std::to_string(bytes.size()));
  Tensor t({count, 1, rows, cols});
  for (std::size_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<double>(bytes[16 + i]) / 255.0;
  return t;
}

std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t magic = read_be32(bytes, 0);
  if (magic != 0x00000801u)
    throw ParseError(0, "bad IDX label magic: expected 0x00000801, got " + hex32(magic));
  std::uint32_t count = read_be32(bytes, 4);
  std::size_t need = 8 + std::size_t(count);
  if (bytes.size() < need)
    throw ParseError(bytes.size(), "truncated IDX label payload: need " +
                                       std::to_string(need) + " bytes, have " +
                                       std::to_string(bytes.size()));
  return {bytes.begin() + 8, bytes.begin() + static_cast<std::ptrdiff_t>(need)};
}

Dataset parse_cifar_bin(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kRecord = 1 + 3 * 32 * 32;
  if (bytes.size() % kRecord != 0)
    throw ParseError(bytes.size() - bytes.size() % kRecord,
                     "CIFAR payload length " + std::to_string(bytes.size()) +
                         " is not a multiple of " + std::to_string(kRecord));
  const std::size_t count = bytes.size() / kRecord;
  Dataset ds;
  ds.classes = 10;
  ds.images = Tensor({count, 3, 32, 32});
  ds.labels.resize(count);
  for (std::size_t r = 0; r < count; ++r) {
    const std::uint8_t* rec = bytes.data() + r * kRecord;
    if (rec[0] > 9)
      throw ParseError(r * kRecord, "CIFAR label " + std::to_string(rec[0]) +
                                        " out of range [0,9]");
    ds.labels[r] = rec[0];
    for (std::size_t i = 0; i < 3 * 32 * 32; ++i)
      ds.images[r * 3 * 32 * 32 + i] = static_cast<double>(rec[1 + i]) / 255.0;
  }
  return ds;
}

Dataset synth_blobs(std::size_t classes, std::size_t per_class, std::size_t dims,
                    double spread, RandomStream stream) {
  if (classes < 2) throw std::invalid_argument("synth_blobs: need at least 2 classes");
  if (per_class < 1 || dims < 1) throw std::invalid_argument("synth_blobs: empty geometry");
  RandomStream centers_stream = stream.fork("centers");
  RandomStream samples_stream = stream.fork("samples");

  std::vector<double> centers(classes * dims);
  for (double& v : centers) v = 2.0 * centers_stream.next_double() - 1.0;

  const std::size_t count = classes * per_class;
  Dataset ds;
  ds.classes = classes;
  ds.images = Tensor({count, dims, 1, 1});
  ds.labels.resize(count);
  std::size_t k = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    RandomStream cs = samples_stream.fork(c);
    for (std::size_t s = 0; s < per_class; ++s, ++k) {
      ds.labels[k] = static_cast<std::uint8_t>(c);
      for (std::size_t d = 0; d < dims; ++d)
        ds.images[k * dims + d] = centers[c * dims + d] + spread * cs.next_gauss();
    }
  }
  return ds;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.seekg(0, std::ios::end);
  std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !f.read(reinterpret_cast<char*>(bytes.data()), size))
    throw std::runtime_error("short read on " + path);
  return bytes;
}

namespace {

struct SpecArgs {
  std::string kind;
  std::vector<std::string> parts;            // positional, comma separated
  std::unordered_map<std::string, std::string> kv;  // key=value entries
};

SpecArgs parse_spec(const std::string& spec) {
  SpecArgs a;
  auto colon = spec.find(':');
  a.kind = spec.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        a.parts.push_back(item);
      else
        a.kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  return a;
}

std::size_t kv_count(const SpecArgs& a, const std::string& key, std::size_t dflt) {
  auto it = a.kv.find(key);
  return it == a.kv.end() ? dflt : static_cast<std::size_t>(std::stoull(it->second));
}

double kv_real(const SpecArgs& a, const std::string& key, double dflt) {
  auto it = a.kv.find(key);
  return it == a.kv.end() ? dflt : std::stod(it->second);
}

Dataset subsample(Dataset ds, std::size_t limit) {
  if (limit == 0 || ds.size() <= limit) return ds;
  std::size_t stride = ds.example_stride();
  ds.images.data.resize(limit * stride);
  ds.images.shape[0] = limit;
  ds.labels.resize(limit);
  return ds;
}

}  // namespace

TaskData load_task(const std::string& spec) {
  SpecArgs a = parse_spec(spec);
  TaskData task;
  task.name = spec;
  if (a.kind == "blobs") {
    std::size_t classes = kv_count(a, "classes", 10);
    std::size_t per_class = kv_count(a, "per_class", 60);
    std::size_t test_per_class = kv_count(a, "test_per_class", 20);
    std::size_t dims = kv_count(a, "dims", 20);
    double spread = kv_real(a, "spread", 1.0);
    std::uint64_t seed = kv_count(a, "seed", 1);
    // train and test share the centers fork, so both splits describe the
    // same classification task
    RandomStream root = RandomStream::from_seed(seed, "blobs");
    Dataset both = synth_blobs(classes, per_class + test_per_class, dims, spread, root);
    // deal the first per_class of each class to train, the rest to test
    std::size_t dtrain = classes * per_class, dtest = classes * test_per_class;
    std::size_t stride = both.example_stride();
    TaskData t;
    t.name = spec;
    t.train.classes = t.test.classes = classes;
    t.train.split = "train";
    t.test.split = "test";
    t.train.images = Tensor({dtrain, dims, 1, 1});
    t.test.images = Tensor({dtest, dims, 1, 1});
    t.train.labels.reserve(dtrain);
    t.test.labels.reserve(dtest);
    std::size_t itr = 0, ite = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      std::size_t base = c * (per_class + test_per_class);
      for (std::size_t s = 0; s < per_class + test_per_class; ++s) {
        const double* src = both.example(base + s);
        if (s < per_class) {
          std::copy_n(src, stride, t.train.images.data.data() + itr * stride);
          t.train.labels.push_back(static_cast<std::uint8_t>(c));
          ++itr;
        } else {
          std::copy_n(src, stride, t.test.images.data.data() + ite * stride);
          t.test.labels.push_back(static_cast<std::uint8_t>(c));
          ++ite;
        }
      }
    }
    return t;
  }
  if (a.kind == "idx") {
    if (a.parts.size() < 4)
      throw std::invalid_argument(
          "idx spec needs train_images,train_labels,test_images,test_labels");
    std::size_t max_train = a.parts.size() > 4 ? std::stoull(a.parts[4]) : 2000;
    std::size_t max_test = a.parts.size() > 5 ? std::stoull(a.parts[5]) : 1000;
    auto build = [](const std::string& ipath, const std::string& lpath, const char* split) {
      Dataset ds;
      ds.images = parse_idx_images(read_file_bytes(ipath));
      ds.labels = parse_idx_labels(read_file_bytes(lpath));
      if (ds.images.dim(0) != ds.labels.size())
        throw std::runtime_error("image/label counts differ between " + ipath + " and " +
                                 lpath);
      ds.classes = 10;
      for (std::size_t i = 0; i < ds.labels.size(); ++i)
        if (ds.labels[i] >= ds.classes)
          throw std::runtime_error("label " + std::to_string(ds.labels[i]) +
                                   " out of range at index " + std::to_string(i) + " in " +
                                   lpath);
      ds.split = split;
      return ds;
    };
    task.train = subsample(build(a.parts[0], a.parts[1], "train"), max_train);
    task.test = subsample(build(a.parts[2], a.parts[3], "test"), max_test);
    return task;
  }
  if (a.kind == "cifar") {
    if (a.parts.size() < 2) throw std::invalid_argument("cifar spec needs train.bin,test.bin");
    std::size_t max_train = a.parts.size() > 2 ? std::stoull(a.parts[2]) : 2000;
    std::size_t max_test = a.parts.size() > 3 ? std::stoull(a.parts[3]) : 1000;
    task.train = subsample(parse_cifar_bin(read_file_bytes(a.parts[0])), max_train);
    task.train.split = "train";
    task.test = subsample(parse_cifar_bin(read_file_bytes(a.parts[1])), max_test);
    task.test.split = "test";
    return task;
  }
  throw std::invalid_argument("unknown dataset spec kind: " + a.kind);
}

}  // namespace ticketlab
