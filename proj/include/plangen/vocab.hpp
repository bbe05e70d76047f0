#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace plangen {

// How coordinate values inside box lists are tokenized. TextDigits ("N")
// spells each value out as digit tokens; SpecialCoord ("S") emits one
// <coord_v> token per value. Fixed per trained model.
enum class NumericMode { TextDigits, SpecialCoord };

const char* numeric_mode_name(NumericMode mode);            // "N" / "S"
NumericMode numeric_mode_from_name(std::string_view name);  // throws on unknown

// Fixed closed vocabulary over the prompt grammar: template words,
// punctuation, digits, special tokens, optional coordinate tokens and the
// image-token block. Immutable after construction.
class Vocab {
public:
    struct Spec {
        NumericMode mode = NumericMode::TextDigits;
        int palette_size = 16;
        int grid = 16;
        std::vector<std::string> words;
    };

    static Vocab build(const Spec& spec);
    // Vocabulary for the shape-scene grammar (palette color names, shape
    // kinds, caption and instruction template words).
    static Vocab scene_default(NumericMode mode);

    int32_t size() const { return static_cast<int32_t>(id_to_token_.size()); }
    NumericMode mode() const { return mode_; }
    int palette_size() const { return palette_size_; }
    int grid() const { return grid_; }

    int32_t id(std::string_view token) const;  // throws on unknown token
    std::optional<int32_t> find(std::string_view token) const;
    const std::string& token(int32_t id) const;  // throws on unknown id

    // Deterministic tokenization of grammar-legal text. Inside <box>...</box>
    // regions digits follow the numeric mode; elsewhere words are separated
    // by single spaces and ','/'.' attach to the preceding word.
    // Throws std::invalid_argument listing the offending word or character.
    std::vector<int32_t> encode(std::string_view text) const;

    // Inverse of encode on grammar-legal text: decode(encode(t)) == t.
    std::string decode(std::span<const int32_t> ids) const;

    // Special-token ids.
    int32_t pad = -1, bos = -1, eos = -1;
    int32_t grounding = -1, grounding_end = -1;
    int32_t ref = -1, ref_end = -1, box = -1, box_end = -1;
    int32_t image_start = -1, image_end = -1, und_start = -1;

    int32_t image_token(int palette_index) const;
    bool is_image_id(int32_t id) const {
        return id >= image_base_ && id < image_base_ + palette_size_;
    }
    int image_index(int32_t id) const { return id - image_base_; }

    bool has_coord_tokens() const { return coord_base_ >= 0; }
    int32_t coord_token(int value) const;  // mode S only
    bool is_coord_id(int32_t id) const {
        return coord_base_ >= 0 && id >= coord_base_ && id <= coord_base_ + 1000;
    }
    int coord_value(int32_t id) const { return id - coord_base_; }

    bool is_digit_id(int32_t id) const {
        return id >= digit_base_ && id < digit_base_ + 10;
    }

    uint64_t hash() const;

    std::string to_json() const;
    static Vocab from_json(std::string_view json_text);

private:
    Vocab() = default;
    int32_t add(std::string token);

    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int32_t> token_to_id_;
    NumericMode mode_ = NumericMode::TextDigits;
    int palette_size_ = 0;
    int grid_ = 0;
    int32_t digit_base_ = -1;
    int32_t coord_base_ = -1;
    int32_t image_base_ = -1;
};

}  // namespace plangen
