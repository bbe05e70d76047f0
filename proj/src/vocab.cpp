#include "plangen/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "plangen/image_codec.hpp"
#include "plangen/tokens.hpp"
#include <nlohmann/json.hpp>

namespace plangen {

const char* numeric_mode_name(NumericMode mode) {
    return mode == NumericMode::TextDigits ? "N" : "S";
}

NumericMode numeric_mode_from_name(std::string_view name) {
    if (name == "N") return NumericMode::TextDigits;
    if (name == "S") return NumericMode::SpecialCoord;
    throw std::invalid_argument("unknown numeric mode: " + std::string(name));
}

int32_t Vocab::add(std::string token) {
    const auto id = static_cast<int32_t>(id_to_token_.size());
    auto [it, inserted] = token_to_id_.emplace(token, id);
    if (!inserted) throw std::invalid_argument("duplicate vocab token: " + token);
    id_to_token_.push_back(std::move(token));
    return id;
}

Vocab Vocab::build(const Spec& spec) {
    if (spec.palette_size <= 0) throw std::invalid_argument("palette_size must be positive");
    if (spec.grid <= 0) throw std::invalid_argument("grid must be positive");
    Vocab v;
    v.mode_ = spec.mode;
    v.palette_size_ = spec.palette_size;
    v.grid_ = spec.grid;

    v.pad = v.add(std::string(tok::kPad));
    v.bos = v.add(std::string(tok::kBos));
    v.eos = v.add(std::string(tok::kEos));
    v.grounding = v.add(std::string(tok::kGrounding));
    v.grounding_end = v.add(std::string(tok::kGroundingEnd));
    v.ref = v.add(std::string(tok::kRef));
    v.ref_end = v.add(std::string(tok::kRefEnd));
    v.box = v.add(std::string(tok::kBox));
    v.box_end = v.add(std::string(tok::kBoxEnd));
    v.image_start = v.add(std::string(tok::kImageStart));
    v.image_end = v.add(std::string(tok::kImageEnd));
    v.und_start = v.add(std::string(tok::kUndStart));

    v.add("[");
    v.add("]");
    v.add(",");
    v.add(".");

    v.digit_base_ = v.add("0");
    for (int d = 1; d <= 9; ++d) v.add(std::string(1, static_cast<char>('0' + d)));

    for (const auto& w : spec.words) {
        if (w.empty()) throw std::invalid_argument("empty vocab word");
        for (const char c : w) {
            if (!std::islower(static_cast<unsigned char>(c)) && c != '_')
                throw std::invalid_argument("vocab words must be lowercase: " + w);
        }
        v.add(w);
    }

    if (spec.mode == NumericMode::SpecialCoord) {
        v.coord_base_ = static_cast<int32_t>(v.id_to_token_.size());
        for (int c = 0; c <= 1000; ++c) v.add("<coord_" + std::to_string(c) + ">");
    }

    v.image_base_ = static_cast<int32_t>(v.id_to_token_.size());
    for (int k = 0; k < spec.palette_size; ++k) v.add("<img_" + std::to_string(k) + ">");
    return v;
}

Vocab Vocab::scene_default(NumericMode mode) {
    Spec spec;
    spec.mode = mode;
    const Palette pal = Palette::scene_default();
    spec.palette_size = static_cast<int>(pal.colors.size());
    spec.grid = 16;
    spec.words = {"a",    "scene",    "with", "on",   "background", "and",
                  "describe", "the",  "image", "give", "layout",
                  "circle",   "square", "triangle"};
    for (const auto& name : pal.names) spec.words.push_back(name);
    return build(spec);
}

int32_t Vocab::id(std::string_view token) const {
    const auto found = find(token);
    if (!found) throw std::invalid_argument("unknown vocab token: " + std::string(token));
    return *found;
}

std::optional<int32_t> Vocab::find(std::string_view token) const {
    const auto it = token_to_id_.find(std::string(token));
    if (it == token_to_id_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocab::token(int32_t id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("unknown token id: " + std::to_string(id));
    return id_to_token_[id];
}

int32_t Vocab::image_token(int palette_index) const {
    if (palette_index < 0 || palette_index >= palette_size_)
        throw std::out_of_range("palette index out of range");
    return image_base_ + palette_index;
}

int32_t Vocab::coord_token(int value) const {
    if (coord_base_ < 0) throw std::logic_error("coordinate tokens require mode S");
    if (value < 0 || value > 1000) throw std::out_of_range("coordinate out of range");
    return coord_base_ + value;
}

namespace {

bool is_word_char(char c) {
    return std::islower(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::vector<int32_t> Vocab::encode(std::string_view text) const {
    std::vector<int32_t> ids;
    bool in_box = false;
    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '<') {
            // longest-first so none of the tags shadow another
            std::string_view matched;
            for (const auto s : tok::kSpecials) {
                if (text.substr(i, s.size()) == s && s.size() > matched.size()) matched = s;
            }
            if (!matched.empty()) {
                ids.push_back(id(matched));
                if (matched == tok::kBox) in_box = true;
                if (matched == tok::kBoxEnd) in_box = false;
                i += matched.size();
                continue;
            }
            // <img_K> / <coord_V> appear when decoded streams are re-encoded
            const size_t close = text.find('>', i);
            if (close != std::string_view::npos) {
                const auto found = find(text.substr(i, close - i + 1));
                if (found) {
                    ids.push_back(*found);
                    i = close + 1;
                    continue;
                }
            }
            throw std::invalid_argument("unencodable text at byte " + std::to_string(i));
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (in_box)
                throw std::invalid_argument("whitespace inside a box list at byte " +
                                            std::to_string(i));
            ++i;
            continue;
        }
        if (c == '[' || c == ']' || c == ',' || c == '.') {
            ids.push_back(id(std::string_view(&c, 1)));
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            if (in_box && mode_ == NumericMode::SpecialCoord) {
                size_t j = i;
                long v = 0;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
                    v = v * 10 + (text[j] - '0');
                    ++j;
                    if (v > 100000) break;
                }
                if (v > 1000)
                    throw std::invalid_argument("coordinate out of range at byte " +
                                                std::to_string(i));
                ids.push_back(coord_token(static_cast<int>(v)));
                i = j;
            } else {
                ids.push_back(digit_base_ + (c - '0'));
                ++i;
            }
            continue;
        }
        if (is_word_char(c)) {
            size_t j = i;
            while (j < text.size() && is_word_char(text[j])) ++j;
            const auto word = text.substr(i, j - i);
            const auto found = find(word);
            if (!found)
                throw std::invalid_argument("out-of-vocabulary word: " + std::string(word));
            ids.push_back(*found);
            i = j;
            continue;
        }
        throw std::invalid_argument("unencodable character at byte " + std::to_string(i));
    }
    return ids;
}

std::string Vocab::decode(std::span<const int32_t> ids) const {
    std::string out;
    bool in_box = false;
    bool prev_glue_right = true;  // no space at the start
    bool prev_digit = false;
    for (const int32_t raw : ids) {
        const std::string& t = token(raw);
        if (raw == box_end) in_box = false;

        std::string rendered = t;
        if (is_coord_id(raw)) rendered = std::to_string(coord_value(raw));

        const bool special = t.size() > 1 && t.front() == '<';
        const bool digit = is_digit_id(raw) || is_coord_id(raw);
        bool glue_left = in_box || special || t == "," || t == "." || t == "[" || t == "]";
        if (digit && prev_digit) glue_left = true;

        if (!out.empty() && !prev_glue_right && !glue_left) out += ' ';
        out += rendered;

        prev_glue_right = in_box || special || t == "[";
        prev_digit = digit;
        if (raw == box) in_box = true;
    }
    return out;
}

uint64_t Vocab::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::string_view s) {
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
    };
    mix(numeric_mode_name(mode_));
    mix(std::to_string(palette_size_));
    mix(std::to_string(grid_));
    for (const auto& t : id_to_token_) {
        mix(t);
        mix(";");
    }
    return h;
}

std::string Vocab::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["mode"] = numeric_mode_name(mode_);
    j["palette_size"] = palette_size_;
    j["grid"] = grid_;
    nlohmann::json tokens = nlohmann::json::object();
    for (int32_t i = 0; i < size(); ++i) tokens[id_to_token_[i]] = i;
    j["tokens"] = std::move(tokens);
    return j.dump(2);
}

Vocab Vocab::from_json(std::string_view json_text) {
    const auto j = nlohmann::json::parse(json_text);
    if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported vocab version");
    std::vector<std::string> by_id(j.at("tokens").size());
    for (const auto& [token, id] : j.at("tokens").items()) {
        const auto i = id.get<size_t>();
        if (i >= by_id.size()) throw std::runtime_error("non-contiguous vocab ids");
        by_id[i] = token;
    }

    // Rebuild through the same constructor path to restore the block offsets.
    Vocab v;
    v.mode_ = numeric_mode_from_name(j.at("mode").get<std::string>());
    v.palette_size_ = j.at("palette_size").get<int>();
    v.grid_ = j.at("grid").get<int>();
    for (auto& t : by_id) {
        if (t.empty()) throw std::runtime_error("non-contiguous vocab ids");
        const auto id = v.add(std::move(t));
        const std::string& s = v.id_to_token_[id];
        if (s == tok::kPad) v.pad = id;
        else if (s == tok::kBos) v.bos = id;
        else if (s == tok::kEos) v.eos = id;
        else if (s == tok::kGrounding) v.grounding = id;
        else if (s == tok::kGroundingEnd) v.grounding_end = id;
        else if (s == tok::kRef) v.ref = id;
        else if (s == tok::kRefEnd) v.ref_end = id;
        else if (s == tok::kBox) v.box = id;
        else if (s == tok::kBoxEnd) v.box_end = id;
        else if (s == tok::kImageStart) v.image_start = id;
        else if (s == tok::kImageEnd) v.image_end = id;
        else if (s == tok::kUndStart) v.und_start = id;
        else if (s == "0") v.digit_base_ = id;
        else if (s == "<coord_0>") v.coord_base_ = id;
        else if (s == "<img_0>") v.image_base_ = id;
    }
    if (v.image_base_ < 0) throw std::runtime_error("vocab is missing image tokens");
    return v;
}

}  // namespace plangen
