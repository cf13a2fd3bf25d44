// Copyright 2026 The momrecon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mom/autograd.hpp"
#include "mom/datasynth.hpp"
#include "mom/memory.hpp"

// Binary formats. All integers are little-endian; all tensor payloads are
// IEEE-754 binary32, little-endian.
//
// Pool (.momp):
//   "MOMP" u32 version u64 n_entries u32 d_clip u32 d_act u32 0x01020304
//   per entry: u64 id, u32 tag_len, tag bytes, f32[d_clip] e_txt,
//              f32[d_clip] e_img, f32[d_act] e_act
// Checkpoint (.momc):
//   "MOMC" u32 version u32 n_blocks
//   per block: u32 name_len, name bytes, u32 rank, u64 dims[rank], f32 data
// Dataset (.momd):
//   "MOMD" u32 version, GeneratorConfig (see write_config), u64 n_train,
//   u64 n_test, then per sample: signal, e_txt, e_img, e_act, labels, clip,
//   flow_gt, latent as f32 arrays with shapes implied by the config
// Clip (.momv):
//   "MOMV" u32 version u32 F u32 C u32 H u32 W f32 data

MOM_NS_BEGIN

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kEndianMarker = 0x01020304;

enum class FormatIssue { BadMagic, BadVersion, BadEndianness, Truncated, DimMismatch, Corrupt };

/// ErrorKind::Format with the specific problem and the byte offset at which
/// it was detected.
class FormatError : public Error {
 public:
  FormatError(FormatIssue issue, std::uint64_t offset, const std::string& what)
      : Error(ErrorKind::Format, what), issue_(issue), offset_(offset) {}
  FormatIssue issue() const { return issue_; }
  std::uint64_t offset() const { return offset_; }

 private:
  FormatIssue issue_;
  std::uint64_t offset_;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

std::vector<std::uint8_t> encode_pool(const MemoryPool& pool);
MemoryPool decode_pool(const std::vector<std::uint8_t>& bytes);
void save_pool(const MemoryPool& pool, const std::string& path);
MemoryPool load_pool(const std::string& path);

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& blocks);
std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const ParamSet& params, const std::string& path);
std::vector<NamedTensor> load_checkpoint(const std::string& path);
/// Copies every block into the parameter of the same name. Missing names
/// or shape disagreements raise FormatIssue::DimMismatch; blocks without a
/// matching parameter are ignored unless `strict`.
void apply_checkpoint(const std::vector<NamedTensor>& blocks, ParamSet& params, bool strict = true);

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

std::vector<std::uint8_t> encode_clip(const Tensor& clip);
Tensor decode_clip(const std::vector<std::uint8_t>& bytes);
void save_clip(const Tensor& clip, const std::string& path);
Tensor load_clip(const std::string& path);

std::vector<std::uint8_t> read_file(const std::string& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

MOM_NS_END
