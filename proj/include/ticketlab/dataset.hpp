#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ticketlab/rng.hpp"
#include "ticketlab/tensor.hpp"

namespace ticketlab {

// One data split. Images are (count, channels, h, w) scaled to [0,1];
// flat feature data uses (count, dims, 1, 1).
struct Dataset {
  Tensor images;
  std::vector<std::uint8_t> labels;
  std::size_t classes = 0;
  std::string split;  // "train" | "test"

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> example_shape() const {
    return {images.shape.begin() + 1, images.shape.end()};
  }
  // Flat view of example i.
  const double* example(std::size_t i) const {
    return images.data.data() + i * example_stride();
  }
  std::size_t example_stride() const {
    return images.numel() / (images.dim(0) == 0 ? 1 : images.dim(0));
  }
};

// Parse error carrying the byte offset where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// IDX containers (the MNIST/Fashion-MNIST format, big-endian).
// magic 0x00000803: images, dims (count, rows, cols); pixels scaled by 1/255.
// magic 0x00000801: labels, dims (count).
Tensor parse_idx_images(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

// CIFAR-10 binary: records of 1 label byte + 3*32*32 pixel bytes.
Dataset parse_cifar_bin(const std::vector<std::uint8_t>& bytes);

// Gaussian class blobs; same stream always yields the identical dataset.
Dataset synth_blobs(std::size_t classes, std::size_t per_class, std::size_t dims,
                    double spread, RandomStream stream);

// Train + held-out pair over shared structure (same blob centers, same files).
struct TaskData {
  std::string name;
  Dataset train;
  Dataset test;
};

// Builds a task from a dataset spec string:
//   "blobs[:classes=C,per_class=P,test_per_class=T,dims=D,spread=S,seed=N]"
//   "idx:train_images,train_labels,test_images,test_labels[,max_train,max_test]"
//   "cifar:train.bin,test.bin[,max_train,max_test]"
TaskData load_task(const std::string& spec);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace ticketlab
