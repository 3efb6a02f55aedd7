#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ticketlab/mask.hpp"
#include "ticketlab/pruning.hpp"
#include "ticketlab/tensor.hpp"

namespace ticketlab::io {

// 64-bit FNV-1a content fingerprint, hex-encoded. Used to address blobs and
// to verify that runs within a seed share identical initial weights.
std::uint64_t fingerprint64(const std::vector<std::uint8_t>& bytes);
std::string fingerprint_hex(const std::vector<std::uint8_t>& bytes);

// --- TCKT mask container ----------------------------------------------------
// Little-endian: magic "TCKT", u32 version, u32 layer count; per layer a
// length-prefixed name, u32 dim count + u64 dims, u64 tau, then the packed
// bitset (LSB-first). Round-trips are bit-exact; tau is verified on read.
std::vector<std::uint8_t> encode_mask(const Mask& mask,
                                      const std::vector<std::string>& layer_names);
Mask decode_mask(const std::vector<std::uint8_t>& bytes,
                 std::vector<std::string>* layer_names = nullptr);

void write_mask(const std::string& path, const Mask& mask,
                const std::vector<std::string>& layer_names);
Mask read_mask(const std::string& path, std::vector<std::string>* layer_names = nullptr);

// --- weight / tensor blobs --------------------------------------------------
std::vector<std::uint8_t> encode_weights(const Weights& w);
Weights decode_weights(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);

// --- run records --------------------------------------------------------
// Layout under `dir`: manifest.json plus blobs/<hash>.bin, content-addressed.
// Reads verify every referenced blob against its recorded hash.
void write_run_record(const std::string& dir, const RunRecord& rec);
RunRecord read_run_record(const std::string& dir);

// Convenience for a whole experiment: records in <root>/s<seed>_r<run>/.
std::string record_dir(const std::string& root, std::uint64_t seed, std::uint64_t run);
void write_records(const std::string& root, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records(const std::string& root);

}  // namespace ticketlab::io
