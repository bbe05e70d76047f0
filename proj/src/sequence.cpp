#include "plangen/sequence.hpp"

#include <stdexcept>

namespace plangen {

const char* task_name(Task task) {
    switch (task) {
        case Task::Joint: return "joint";
        case Task::LayoutToImage: return "layout_to_image";
        case Task::PlanOnly: return "plan";
        case Task::Understanding: return "understand";
    }
    return "unknown";
}

size_t TokenSequence::segment_length(SegmentKind kind) const {
    size_t n = 0;
    for (const auto& s : segments) {
        if (s.kind == kind) n += s.end - s.begin;
    }
    return n;
}

std::optional<Segment> TokenSequence::find_segment(SegmentKind kind) const {
    for (const auto& s : segments) {
        if (s.kind == kind) return s;
    }
    return std::nullopt;
}

void TokenSequence::validate() const {
    if (ids.size() != loss_weight.size() || ids.size() != channel.size())
        throw std::logic_error("per-token arrays out of sync");
    size_t cursor = 0;
    for (const auto& s : segments) {
        if (s.begin != cursor || s.end < s.begin || s.end > ids.size())
            throw std::logic_error("segments must partition the sequence exactly");
        cursor = s.end;
        const bool conditioning =
            s.kind == SegmentKind::TextPrompt || s.kind == SegmentKind::CondImageTokens;
        for (size_t i = s.begin; i < s.end; ++i) {
            if (conditioning && loss_weight[i] != 0.0f)
                throw std::logic_error("conditioning spans must carry zero loss weight");
            if ((loss_weight[i] > 0.0f) != (channel[i] != LossChannel::None))
                throw std::logic_error("loss weight and channel disagree");
        }
    }
    if (cursor != ids.size())
        throw std::logic_error("segments must partition the sequence exactly");
}

const std::string SequenceBuilder::kInstruction = "describe the image and give the layout.";

namespace {

struct Assembler {
    TokenSequence seq;

    void push(SegmentKind kind, const std::vector<int32_t>& ids, float weight,
              LossChannel ch) {
        const size_t begin = seq.ids.size();
        for (const auto id : ids) {
            seq.ids.push_back(id);
            seq.loss_weight.push_back(weight);
            seq.channel.push_back(weight > 0 ? ch : LossChannel::None);
        }
        // merge adjacent structural segments to keep the partition tidy
        if (!seq.segments.empty() && seq.segments.back().kind == kind &&
            seq.segments.back().end == begin) {
            seq.segments.back().end = seq.ids.size();
        } else {
            seq.segments.push_back({kind, begin, seq.ids.size()});
        }
    }
    void push_one(SegmentKind kind, int32_t id, float weight, LossChannel ch) {
        push(kind, std::vector<int32_t>{id}, weight, ch);
    }
};

std::vector<int32_t> image_ids(const Vocab& vocab, const ImageTokens& image) {
    image.validate(vocab.palette_size());
    if (image.grid != vocab.grid())
        throw std::invalid_argument("image token grid does not match the vocabulary");
    std::vector<int32_t> ids;
    ids.reserve(image.cells.size());
    for (const auto cell : image.cells) ids.push_back(vocab.image_token(cell));
    return ids;
}

}  // namespace

TokenSequence SequenceBuilder::build_joint(const std::string& caption, const Layout& layout,
                                           const ImageTokens& image, float alpha,
                                           float beta) const {
    Assembler a;
    a.seq.task = Task::Joint;
    a.push_one(SegmentKind::Structural, vocab_->bos, 0, LossChannel::None);
    a.push(SegmentKind::TextPrompt, vocab_->encode(caption), 0, LossChannel::None);
    a.push_one(SegmentKind::Structural, vocab_->grounding, 0, LossChannel::None);
    a.push(SegmentKind::LayoutTokens, vocab_->encode(serialize_layout(layout)), alpha,
           LossChannel::LayoutPlanning);
    a.push_one(SegmentKind::Structural, vocab_->grounding_end, alpha,
               LossChannel::LayoutPlanning);
    a.push_one(SegmentKind::Structural, vocab_->image_start, 0, LossChannel::None);
    a.push(SegmentKind::ImageTokens, image_ids(*vocab_, image), beta,
           LossChannel::LayoutToImage);
    a.push_one(SegmentKind::Structural, vocab_->image_end, beta, LossChannel::LayoutToImage);
    a.push_one(SegmentKind::Structural, vocab_->eos, 0, LossChannel::None);
    if (static_cast<int>(a.seq.ids.size()) > max_len_)
        throw std::invalid_argument("sequence length " + std::to_string(a.seq.ids.size()) +
                                    " exceeds max length " + std::to_string(max_len_));
    return std::move(a.seq);
}

TokenSequence SequenceBuilder::build_layout_to_image(const std::string& caption,
                                                     const Layout& layout,
                                                     const ImageTokens& image) const {
    TokenSequence seq = build_joint(caption, layout, image, 0.0f, 1.0f);
    seq.task = Task::LayoutToImage;
    return seq;
}

TokenSequence SequenceBuilder::build_plan_only(const std::string& caption,
                                               const Layout& layout, float alpha) const {
    Assembler a;
    a.seq.task = Task::PlanOnly;
    a.push_one(SegmentKind::Structural, vocab_->bos, 0, LossChannel::None);
    a.push(SegmentKind::TextPrompt, vocab_->encode(caption), 0, LossChannel::None);
    a.push_one(SegmentKind::Structural, vocab_->grounding, 0, LossChannel::None);
    a.push(SegmentKind::LayoutTokens, vocab_->encode(serialize_layout(layout)), alpha,
           LossChannel::LayoutPlanning);
    a.push_one(SegmentKind::Structural, vocab_->grounding_end, alpha,
               LossChannel::LayoutPlanning);
    a.push_one(SegmentKind::Structural, vocab_->eos, 0, LossChannel::None);
    if (static_cast<int>(a.seq.ids.size()) > max_len_)
        throw std::invalid_argument("sequence length " + std::to_string(a.seq.ids.size()) +
                                    " exceeds max length " + std::to_string(max_len_));
    return std::move(a.seq);
}

TokenSequence SequenceBuilder::build_understanding(const ImageTokens& image,
                                                   const std::string& caption,
                                                   const Layout& layout, float gamma) const {
    Assembler a;
    a.seq.task = Task::Understanding;
    a.push_one(SegmentKind::Structural, vocab_->bos, 0, LossChannel::None);
    a.push_one(SegmentKind::Structural, vocab_->und_start, 0, LossChannel::None);
    a.push(SegmentKind::CondImageTokens, image_ids(*vocab_, image), 0, LossChannel::None);
    a.push(SegmentKind::TextPrompt, vocab_->encode(kInstruction), 0, LossChannel::None);
    // the caption is predicted before the layout; <grounding> terminates it
    a.push(SegmentKind::CaptionText, vocab_->encode(caption), gamma,
           LossChannel::Understanding);
    a.push_one(SegmentKind::Structural, vocab_->grounding, gamma, LossChannel::Understanding);
    a.push(SegmentKind::LayoutTokens, vocab_->encode(serialize_layout(layout)), gamma,
           LossChannel::Understanding);
    a.push_one(SegmentKind::Structural, vocab_->grounding_end, gamma,
               LossChannel::Understanding);
    a.push_one(SegmentKind::Structural, vocab_->eos, 0, LossChannel::None);
    if (static_cast<int>(a.seq.ids.size()) > max_len_)
        throw std::invalid_argument("sequence length " + std::to_string(a.seq.ids.size()) +
                                    " exceeds max length " + std::to_string(max_len_));
    return std::move(a.seq);
}

TokenSequence SequenceBuilder::build_inference_prefix(Task task, const std::string& caption,
                                                      const std::optional<Layout>& layout,
                                                      const ImageTokens* image) const {
    Assembler a;
    a.seq.task = task;
    switch (task) {
        case Task::PlanOnly:
        case Task::Joint:
            a.push_one(SegmentKind::Structural, vocab_->bos, 0, LossChannel::None);
            a.push(SegmentKind::TextPrompt, vocab_->encode(caption), 0, LossChannel::None);
            a.push_one(SegmentKind::Structural, vocab_->grounding, 0, LossChannel::None);
            break;
        case Task::LayoutToImage: {
            if (!layout)
                throw std::invalid_argument("layout_to_image prefix requires a layout");
            a.push_one(SegmentKind::Structural, vocab_->bos, 0, LossChannel::None);
            a.push(SegmentKind::TextPrompt, vocab_->encode(caption), 0, LossChannel::None);
            a.push_one(SegmentKind::Structural, vocab_->grounding, 0, LossChannel::None);
            a.push(SegmentKind::LayoutTokens, vocab_->encode(serialize_layout(*layout)), 0,
                   LossChannel::None);
            a.push_one(SegmentKind::Structural, vocab_->grounding_end, 0, LossChannel::None);
            a.push_one(SegmentKind::Structural, vocab_->image_start, 0, LossChannel::None);
            break;
        }
        case Task::Understanding: {
            if (!image)
                throw std::invalid_argument("understanding prefix requires image tokens");
            a.push_one(SegmentKind::Structural, vocab_->bos, 0, LossChannel::None);
            a.push_one(SegmentKind::Structural, vocab_->und_start, 0, LossChannel::None);
            a.push(SegmentKind::CondImageTokens, image_ids(*vocab_, *image), 0,
                   LossChannel::None);
            a.push(SegmentKind::TextPrompt, vocab_->encode(kInstruction), 0,
                   LossChannel::None);
            break;
        }
    }
    if (static_cast<int>(a.seq.ids.size()) > max_len_)
        throw std::invalid_argument("prefix length " + std::to_string(a.seq.ids.size()) +
                                    " exceeds max length " + std::to_string(max_len_));
    return std::move(a.seq);
}

}  // namespace plangen
