#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plangen/image_codec.hpp"
#include "plangen/layout.hpp"
#include "plangen/vocab.hpp"

namespace plangen {

enum class Task { Joint, LayoutToImage, PlanOnly, Understanding };

const char* task_name(Task task);

enum class SegmentKind {
    Structural,      // <bos>, tags, <eos>, ...
    TextPrompt,      // conditioning text t (global caption or instruction)
    CaptionText,     // the predicted caption in understanding sequences
    LayoutTokens,    // layout condition l, between the grounding tags
    ImageTokens,     // generated image tokens g
    CondImageTokens  // conditional image tokens q (understanding input)
};

enum class LossChannel : uint8_t { None = 0, LayoutPlanning, LayoutToImage, Understanding };

struct Segment {
    SegmentKind kind;
    size_t begin = 0;
    size_t end = 0;  // half-open
};

// One unified-prompt training or inference sequence: token ids partitioned
// into typed segments, with a per-token loss weight and loss channel.
// Conditioning spans (TextPrompt, CondImageTokens) always carry weight zero;
// the structural token closing a supervised span is supervised with it.
struct TokenSequence {
    Task task = Task::Joint;
    std::vector<int32_t> ids;
    std::vector<Segment> segments;
    std::vector<float> loss_weight;
    std::vector<LossChannel> channel;

    size_t size() const { return ids.size(); }
    size_t segment_length(SegmentKind kind) const;
    // first segment of the kind, if present
    std::optional<Segment> find_segment(SegmentKind kind) const;

    // Checks the structural invariants (exact partition, weight/channel
    // consistency, zero weight on conditioning spans). Throws on violation.
    void validate() const;
};

class SequenceBuilder {
public:
    SequenceBuilder(const Vocab& vocab, int max_len) : vocab_(&vocab), max_len_(max_len) {}

    // <bos> T <grounding> L </grounding> <image_start> G <image_end> <eos>
    // Layout span and </grounding> weighted alpha (planning); image span and
    // <image_end> weighted beta (generation). One sequence supervises both.
    TokenSequence build_joint(const std::string& caption, const Layout& layout,
                              const ImageTokens& image, float alpha, float beta) const;

    // build_joint with alpha = 0: the layout is a pure condition.
    TokenSequence build_layout_to_image(const std::string& caption, const Layout& layout,
                                        const ImageTokens& image) const;

    // <bos> T <grounding> L </grounding> <eos>, layout span weighted alpha.
    TokenSequence build_plan_only(const std::string& caption, const Layout& layout,
                                  float alpha = 1.0f) const;

    // <bos> <und_start> Q instruction T(caption) <grounding> L </grounding> <eos>
    // Caption span, layout span and their closing tags weighted gamma.
    TokenSequence build_understanding(const ImageTokens& image, const std::string& caption,
                                      const Layout& layout, float gamma = 1.0f) const;

    // Inference-time prefixes. plan/joint end at <grounding>; layout_to_image
    // ends at <image_start> (requires a layout); understanding ends after the
    // instruction text (requires image tokens).
    TokenSequence build_inference_prefix(Task task, const std::string& caption,
                                         const std::optional<Layout>& layout = std::nullopt,
                                         const ImageTokens* image = nullptr) const;

    const Vocab& vocab() const { return *vocab_; }
    int max_len() const { return max_len_; }

    // the fixed understanding instruction
    static const std::string kInstruction;

private:
    const Vocab* vocab_;
    int max_len_;
};

}  // namespace plangen
