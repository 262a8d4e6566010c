#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spdnet/config.hpp"
#include "spdnet/model.hpp"

namespace spdnet {

// Container layout: "SPDNETCK", u32 format version, u64 header length, JSON
// header, raw tensor blob, u32 CRC-32 of everything before it. All integers
// little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline constexpr const char* kKindModel = "spdnet";
// Predicts the ground truth; used to exercise the evaluation path.
inline constexpr const char* kKindTruthEcho = "truth_echo";

struct Checkpoint {
    std::string kind = kKindModel;
    RunConfig config;
    std::int64_t epoch = 0;  // completed epochs
    std::int64_t step = 0;   // completed segmentor steps
    std::vector<std::string> components;
    std::map<std::string, torch::Tensor> tensors;  // "model/...", "opt_gen/...", "opt_disc/...", "rng"
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
// VersionError on a format mismatch, CorruptFileError on bad magic, truncation
// or checksum failure, IoError when unreadable.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Weights and buffers of every constructed component.
void store_model(Checkpoint& ck, const SpdNetImpl& m);
// Copies weights into `m`; MissingComponentError when `m` has a component the
// checkpoint lacks, ShapeMismatch on differing shapes.
void restore_model(SpdNetImpl& m, const Checkpoint& ck);

void store_adam(Checkpoint& ck, const std::string& prefix, torch::optim::Adam& opt);
void restore_adam(torch::optim::Adam& opt, const std::string& prefix, const Checkpoint& ck);

void store_generator(Checkpoint& ck, const at::Generator& gen);
void restore_generator(at::Generator& gen, const Checkpoint& ck);

// Builds the model a checkpoint describes and loads its weights.
SpdNet model_from_checkpoint(const Checkpoint& ck);

}  // namespace spdnet
