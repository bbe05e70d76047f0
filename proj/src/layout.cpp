#include "plangen/layout.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "plangen/tokens.hpp"
#include <nlohmann/json.hpp>

namespace plangen {

std::string serialize_layout(const Layout& layout) {
    std::ostringstream os;
    for (const auto& el : layout.elements) {
        if (el.caption.empty()) throw std::invalid_argument("element caption is empty");
        if (tok::contains_reserved(el.caption))
            throw std::invalid_argument("caption contains a reserved token: " + el.caption);
        if (el.boxes.empty()) throw std::invalid_argument("element has no boxes");
        os << tok::kRef << el.caption << tok::kRefEnd << tok::kBox << "[";
        for (size_t i = 0; i < el.boxes.size(); ++i) {
            el.boxes[i].validate();
            if (i) os << ",";
            os << el.boxes[i].to_string();
        }
        os << "]" << tok::kBoxEnd;
    }
    return os.str();
}

const char* parse_error_kind_name(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::UnbalancedRef: return "unbalanced ref";
        case ParseErrorKind::UnbalancedBox: return "unbalanced box";
        case ParseErrorKind::BadBoxList: return "bad box list";
        case ParseErrorKind::CoordOutOfRange: return "coordinate out of range";
        case ParseErrorKind::InvertedBox: return "inverted box";
        case ParseErrorKind::TrailingText: return "trailing text";
    }
    return "unknown";
}

namespace {

struct Cursor {
    std::string_view text;
    size_t pos = 0;

    bool eof() const { return pos >= text.size(); }
    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool consume(std::string_view lit) {
        if (text.substr(pos, lit.size()) == lit) {
            pos += lit.size();
            return true;
        }
        return false;
    }
    bool peek_digit() const {
        return !eof() && std::isdigit(static_cast<unsigned char>(text[pos]));
    }
};

ParseError err(ParseErrorKind kind, size_t offset, std::string msg) {
    return ParseError{kind, offset, std::move(msg)};
}

// Parses an integer coordinate in [0, 1000].
Expected<int, ParseError> parse_coord(Cursor& c) {
    const size_t start = c.pos;
    if (!c.peek_digit())
        return err(ParseErrorKind::BadBoxList, start, "expected a coordinate digit");
    long v = 0;
    while (c.peek_digit()) {
        v = v * 10 + (c.text[c.pos] - '0');
        ++c.pos;
        if (v > 100000) break;  // keeps huge inputs from overflowing
    }
    if (v > 1000)
        return err(ParseErrorKind::CoordOutOfRange, start, "coordinate out of range");
    return static_cast<int>(v);
}

Expected<BBox, ParseError> parse_box(Cursor& c) {
    const size_t start = c.pos;
    if (!c.consume("["))
        return err(ParseErrorKind::BadBoxList, c.pos, "expected '[' starting a box");
    int coords[4];
    for (int i = 0; i < 4; ++i) {
        if (i && !c.consume(","))
            return err(ParseErrorKind::BadBoxList, c.pos, "expected ',' between coordinates");
        auto coord = parse_coord(c);
        if (!coord) return coord.error();
        coords[i] = coord.value();
    }
    if (!c.consume("]"))
        return err(ParseErrorKind::BadBoxList, c.pos, "expected ']' closing a box");
    BBox box{coords[0], coords[1], coords[2], coords[3]};
    if (box.x0 >= box.x1) return err(ParseErrorKind::InvertedBox, start, "x0 >= x1");
    if (box.y0 >= box.y1) return err(ParseErrorKind::InvertedBox, start, "y0 >= y1");
    return box;
}

Expected<LayoutElement, ParseError> parse_element(Cursor& c) {
    const size_t ref_start = c.pos;
    if (!c.consume(tok::kRef))
        return err(ParseErrorKind::UnbalancedRef, ref_start, "expected <ref>");
    const size_t cap_start = c.pos;
    const size_t cap_end = c.text.find(tok::kRefEnd, cap_start);
    if (cap_end == std::string_view::npos)
        return err(ParseErrorKind::UnbalancedRef, ref_start, "missing </ref>");
    LayoutElement el;
    el.caption = std::string(c.text.substr(cap_start, cap_end - cap_start));
    if (el.caption.empty())
        return err(ParseErrorKind::UnbalancedRef, cap_start, "empty caption");
    if (tok::contains_reserved(el.caption))
        return err(ParseErrorKind::UnbalancedRef, cap_start,
                   "reserved token inside a caption");
    c.pos = cap_end + tok::kRefEnd.size();

    const size_t box_start = c.pos;
    if (!c.consume(tok::kBox))
        return err(ParseErrorKind::UnbalancedBox, box_start, "expected <box>");
    if (!c.consume("["))
        return err(ParseErrorKind::BadBoxList, c.pos, "expected '[' starting the box list");
    while (true) {
        auto box = parse_box(c);
        if (!box) return box.error();
        el.boxes.push_back(box.value());
        if (c.consume(",")) continue;
        break;
    }
    if (!c.consume("]"))
        return err(ParseErrorKind::BadBoxList, c.pos, "expected ']' closing the box list");
    if (!c.consume(tok::kBoxEnd))
        return err(ParseErrorKind::UnbalancedBox, c.pos, "missing </box>");
    return el;
}

}  // namespace

Expected<Layout, ParseError> parse_layout(std::string_view text) {
    Cursor c{text};
    Layout layout;
    c.skip_ws();
    while (!c.eof()) {
        auto el = parse_element(c);
        if (!el) return el.error();
        layout.elements.push_back(std::move(el).value());
        c.skip_ws();
        if (!c.eof() && c.text.substr(c.pos, tok::kRef.size()) != tok::kRef)
            return ParseError{ParseErrorKind::TrailingText, c.pos,
                              "unexpected text after an element"};
    }
    return layout;
}

std::string layout_record_to_json(const std::string& caption, const Layout& layout) {
    nlohmann::json j;
    j["caption"] = caption;
    j["elements"] = nlohmann::json::array();
    for (const auto& el : layout.elements) {
        nlohmann::json je;
        je["ref"] = el.caption;
        je["boxes"] = nlohmann::json::array();
        for (const auto& b : el.boxes) je["boxes"].push_back({b.x0, b.y0, b.x1, b.y1});
        j["elements"].push_back(std::move(je));
    }
    return j.dump();
}

std::pair<std::string, Layout> layout_record_from_json(std::string_view json_text) {
    const auto j = nlohmann::json::parse(json_text);
    std::pair<std::string, Layout> out;
    out.first = j.at("caption").get<std::string>();
    for (const auto& je : j.at("elements")) {
        LayoutElement el;
        el.caption = je.at("ref").get<std::string>();
        for (const auto& jb : je.at("boxes")) {
            if (jb.size() != 4) throw std::runtime_error("box must have 4 coordinates");
            BBox b{jb[0].get<int>(), jb[1].get<int>(), jb[2].get<int>(), jb[3].get<int>()};
            b.validate();
            el.boxes.push_back(b);
        }
        if (el.caption.empty() || el.boxes.empty())
            throw std::runtime_error("element needs a caption and at least one box");
        out.second.elements.push_back(std::move(el));
    }
    return out;
}

}  // namespace plangen
