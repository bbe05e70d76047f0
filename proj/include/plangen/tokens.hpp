#pragma once

#include <array>
#include <string_view>

namespace plangen::tok {

// Special-token strings shared by the layout grammar and the tokenizer.
inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kBos = "<bos>";
inline constexpr std::string_view kEos = "<eos>";
inline constexpr std::string_view kGrounding = "<grounding>";
inline constexpr std::string_view kGroundingEnd = "</grounding>";
inline constexpr std::string_view kRef = "<ref>";
inline constexpr std::string_view kRefEnd = "</ref>";
inline constexpr std::string_view kBox = "<box>";
inline constexpr std::string_view kBoxEnd = "</box>";
inline constexpr std::string_view kImageStart = "<image_start>";
inline constexpr std::string_view kImageEnd = "<image_end>";
inline constexpr std::string_view kUndStart = "<und_start>";

inline constexpr std::array<std::string_view, 12> kSpecials = {
    kPad, kBos, kEos, kGrounding, kGroundingEnd, kRef,
    kRefEnd, kBox, kBoxEnd, kImageStart, kImageEnd, kUndStart,
};

inline bool contains_reserved(std::string_view text) {
    for (const auto s : kSpecials) {
        if (text.find(s) != std::string_view::npos) return true;
    }
    return false;
}

}  // namespace plangen::tok
