#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "plangen/expected.hpp"
#include "plangen/geometry.hpp"

namespace plangen {

// One local caption with the box (or boxes) it grounds.
struct LayoutElement {
    std::string caption;
    std::vector<BBox> boxes;

    bool operator==(const LayoutElement&) const = default;
};

// The layout condition: an ordered list of grounded local captions.
struct Layout {
    std::vector<LayoutElement> elements;

    bool operator==(const Layout&) const = default;
    bool empty() const { return elements.empty(); }
    size_t size() const { return elements.size(); }
};

// Emits `<ref>{caption}</ref><box>[[x0,y0,x1,y1],...]</box>` per element, in
// order, with no whitespace. The caller wraps the result in
// <grounding>...</grounding> when embedding it in a prompt.
// Throws std::invalid_argument on an invalid layout (empty caption, reserved
// token inside a caption, missing or invalid boxes).
std::string serialize_layout(const Layout& layout);

enum class ParseErrorKind {
    UnbalancedRef,
    UnbalancedBox,
    BadBoxList,
    CoordOutOfRange,
    InvertedBox,
    TrailingText,
};

struct ParseError {
    ParseErrorKind kind;
    size_t offset = 0;  // byte offset into the input
    std::string message;
};

const char* parse_error_kind_name(ParseErrorKind kind);

// Total function over text: recovers the element list from the grammar above,
// tolerating surrounding whitespace (including between elements).
Expected<Layout, ParseError> parse_layout(std::string_view text);

// JSON record used by dataset files and eval outputs:
//   {"caption": str, "elements": [{"ref": str, "boxes": [[i,i,i,i], ...]}, ...]}
std::string layout_record_to_json(const std::string& caption, const Layout& layout);
// Parses the record above; throws std::runtime_error on malformed input.
std::pair<std::string, Layout> layout_record_from_json(std::string_view json_text);

}  // namespace plangen
