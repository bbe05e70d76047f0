#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plangen/model.hpp"
#include "plangen/vocab.hpp"

namespace plangen {

// Adam moments, saved so training resumes bit-for-bit.
struct OptimizerState {
    std::vector<float> m, v;
    int64_t step = 0;
};

struct Checkpoint {
    ModelConfig config;
    NumericMode mode = NumericMode::TextDigits;
    uint64_t vocab_hash = 0;
    int64_t step = 0;
    std::vector<float> params;
    std::optional<OptimizerState> opt;
};

// Single self-describing file: magic, JSON header, raw float32 tensors.
// Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace plangen
