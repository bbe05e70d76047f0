#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plangen/geometry.hpp"
#include "plangen/image.hpp"
#include "plangen/image_codec.hpp"
#include "plangen/layout.hpp"

namespace plangen {

enum class ShapeKind { Circle, Square, Triangle };

const char* shape_kind_name(ShapeKind kind);

struct ShapeSpec {
    ShapeKind kind = ShapeKind::Circle;
    int color = 0;  // palette index
    BBox box;
};

struct SceneConfig {
    int min_shapes = 1;
    int max_shapes = 4;
    int min_size = 350;  // normalized units per side; >= 5 token cells so the
    int max_size = 450;  // fill-ratio bands survive cell quantization
    int aspect_pct_min = 80;  // height as a percentage of width
    int aspect_pct_max = 125;
    int margin = 63;      // minimum gap between boxes, ~one token cell
    int coord_step = 5;   // coordinates snap to this grid
    int image_size = 128; // R
    int grid = 16;        // G
    bool allow_overlap = false;
    int max_attempts = 200;
    std::string background = "gray";
    std::vector<std::string> shape_colors = {"red",  "orange", "yellow",  "green",
                                             "cyan", "blue",   "purple", "magenta"};

    void validate(const Palette& palette) const;  // throws std::invalid_argument
    uint64_t hash() const;
    std::string to_json() const;
    static SceneConfig from_json(std::string_view json_text);
};

struct Scene {
    uint64_t seed = 0;
    int background = 0;  // palette index
    std::vector<ShapeSpec> shapes;
    std::string global_caption;
    Layout layout;
    Image image;
};

// "a scene with a red circle, a blue square and a green triangle on a gray
// background"; the shape list may be empty.
std::string make_scene_caption(const std::vector<std::string>& shape_captions,
                               const std::string& background);
std::string shape_caption(const ShapeSpec& shape, const Palette& palette);

// Deterministic under (seed, config): rejection-samples non-overlapping boxes
// and renders the scene. Throws std::runtime_error when the placement budget
// is exhausted (suggesting fewer or smaller shapes).
Scene sample_scene(uint64_t seed, const SceneConfig& config, const Palette& palette);

// sample_scene with the dataset retry rule: the effective seed is
// mix_seed(dataset_seed, index, salt) for the first salt that places.
Scene sample_scene_with_retry(uint64_t dataset_seed, uint64_t index,
                              const SceneConfig& config, const Palette& palette);

Image render_scene(const std::vector<ShapeSpec>& shapes, int background,
                   const Palette& palette, int image_size);

// Analytic detector: one layout element per connected component of each
// non-background palette color, with the kind classified by the fill ratio
// area(component) / area(bbox): square >= 0.9, circle in [0.65, 0.9),
// triangle in [0.35, 0.65), otherwise "unknown".
Layout oracle_detect(const Image& image, const Palette& palette, int background);

struct RemovalCase {
    ImageTokens original;          // o in the teacher-forcing rule
    std::string target_caption;    // scene caption without the victim
    Layout target_layout;
    std::string negative_caption;  // pre-edit caption including the victim
    Layout negative_layout;
    LayoutElement victim;
};

RemovalCase build_removal_case(const Scene& scene, size_t victim_index,
                               const Palette& palette, int grid);

// Dataset files: manifest.json plus records.ndjson with one scene per line:
//   {"seed", "global_caption", "layout", "image_tokens", "png_path"?}
struct SceneRecord {
    uint64_t seed = 0;
    std::string global_caption;
    Layout layout;
    ImageTokens image_tokens;
    std::string png_path;  // empty when PNGs were not written
};

struct DatasetManifest {
    uint64_t seed = 0;
    uint64_t count = 0;
    uint64_t config_hash = 0;
    SceneConfig config;
};

SceneRecord scene_to_record(const Scene& scene, const Palette& palette, int grid);

void write_dataset(const std::string& dir, uint64_t seed, uint64_t count,
                   const SceneConfig& config, const Palette& palette, bool write_pngs);
DatasetManifest read_manifest(const std::string& dir);
std::vector<SceneRecord> read_dataset(const std::string& dir);

}  // namespace plangen
