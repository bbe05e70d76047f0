#include "plangen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "plangen/rng.hpp"
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace plangen {

const char* shape_kind_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Circle: return "circle";
        case ShapeKind::Square: return "square";
        case ShapeKind::Triangle: return "triangle";
    }
    return "unknown";
}

void SceneConfig::validate(const Palette& palette) const {
    if (min_shapes < 1) throw std::invalid_argument("min_shapes must be >= 1");
    if (max_shapes < min_shapes) throw std::invalid_argument("max_shapes < min_shapes");
    if (grid <= 0 || image_size <= 0 || image_size % grid != 0)
        throw std::invalid_argument("image_size must be a positive multiple of grid");
    const int two_cells = 2 * 1000 / grid;
    if (min_size < two_cells)
        throw std::invalid_argument("min_size must be at least two grid cells (" +
                                    std::to_string(two_cells) + " units)");
    if (max_size < min_size || max_size > 1000)
        throw std::invalid_argument("size range invalid");
    if (aspect_pct_min < 50 || aspect_pct_max > 200 || aspect_pct_min > aspect_pct_max)
        throw std::invalid_argument("aspect range invalid");
    if (margin < 0) throw std::invalid_argument("margin must be >= 0");
    if (coord_step < 1) throw std::invalid_argument("coord_step must be >= 1");
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
    if (static_cast<int>(shape_colors.size()) < max_shapes)
        throw std::invalid_argument("need at least max_shapes distinct shape_colors");
    const int bg = palette.index_of(background);
    for (const auto& c : shape_colors) {
        if (palette.index_of(c) == bg)
            throw std::invalid_argument("shape color equals the background: " + c);
    }
}

std::string SceneConfig::to_json() const {
    nlohmann::json j;
    j["min_shapes"] = min_shapes;
    j["max_shapes"] = max_shapes;
    j["min_size"] = min_size;
    j["max_size"] = max_size;
    j["aspect_pct_min"] = aspect_pct_min;
    j["aspect_pct_max"] = aspect_pct_max;
    j["margin"] = margin;
    j["coord_step"] = coord_step;
    j["image_size"] = image_size;
    j["grid"] = grid;
    j["allow_overlap"] = allow_overlap;
    j["max_attempts"] = max_attempts;
    j["background"] = background;
    j["shape_colors"] = shape_colors;
    return j.dump();
}

SceneConfig SceneConfig::from_json(std::string_view json_text) {
    const auto j = nlohmann::json::parse(json_text);
    SceneConfig c;
    auto opt = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    opt("min_shapes", c.min_shapes);
    opt("max_shapes", c.max_shapes);
    opt("min_size", c.min_size);
    opt("max_size", c.max_size);
    opt("aspect_pct_min", c.aspect_pct_min);
    opt("aspect_pct_max", c.aspect_pct_max);
    opt("margin", c.margin);
    opt("coord_step", c.coord_step);
    opt("image_size", c.image_size);
    opt("grid", c.grid);
    opt("allow_overlap", c.allow_overlap);
    opt("max_attempts", c.max_attempts);
    opt("background", c.background);
    opt("shape_colors", c.shape_colors);
    return c;
}

uint64_t SceneConfig::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const char ch : to_json()) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string make_scene_caption(const std::vector<std::string>& shape_captions,
                               const std::string& background) {
    std::ostringstream os;
    os << "a scene";
    if (!shape_captions.empty()) {
        os << " with ";
        for (size_t i = 0; i < shape_captions.size(); ++i) {
            if (i > 0) os << (i + 1 == shape_captions.size() ? " and " : ", ");
            os << shape_captions[i];
        }
    }
    os << " on a " << background << " background";
    return os.str();
}

std::string shape_caption(const ShapeSpec& shape, const Palette& palette) {
    return "a " + palette.names[shape.color] + " " + shape_kind_name(shape.kind);
}

namespace {

// Half-open pixel rectangle of a normalized box at resolution R.
struct PxRect {
    int x0, y0, x1, y1;
};

PxRect to_pixels(const BBox& b, int image_size) {
    auto scale = [image_size](int v) {
        return static_cast<int>(std::llround(static_cast<double>(v) * image_size / 1000.0));
    };
    return {scale(b.x0), scale(b.y0), scale(b.x1), scale(b.y1)};
}

bool boxes_too_close(const BBox& a, const BBox& b, int margin) {
    return a.x0 < b.x1 + margin && b.x0 < a.x1 + margin &&
           a.y0 < b.y1 + margin && b.y0 < a.y1 + margin;
}

// Shape geometry is calibrated so the oracle's fill-ratio bands hold both on
// the rendered pixels and after a round trip through the 16x16 token codec:
// the circle is a superellipse (exponent 1.75, fill ~0.75) whose corners stay
// clear of cell-quantization noise, and the triangle has a flat apex plateau
// with concave flanks (fill ~0.41) so its bounding box survives cell erosion.
constexpr double kCircleExponent = 1.75;
constexpr double kTriApexPlateau = 0.18;
constexpr double kTriFlankExponent = 2.6;

void draw_shape(Image& img, const ShapeSpec& shape, const Palette& palette) {
    const PxRect r = to_pixels(shape.box, img.width);
    const Rgb color = palette.colors[shape.color];
    const double cx = 0.5 * (r.x0 + r.x1);
    const double cy = 0.5 * (r.y0 + r.y1);
    const double rx = 0.5 * (r.x1 - r.x0);
    const double ry = 0.5 * (r.y1 - r.y0);
    for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            bool inside = false;
            switch (shape.kind) {
                case ShapeKind::Square:
                    inside = true;
                    break;
                case ShapeKind::Circle: {
                    const double dx = std::abs(px - cx) / rx;
                    const double dy = std::abs(py - cy) / ry;
                    inside = std::pow(dx, kCircleExponent) + std::pow(dy, kCircleExponent) <= 1.0;
                    break;
                }
                case ShapeKind::Triangle: {
                    // apex plateau at the top, full-width base at the bottom
                    const double depth = (py - r.y0) / (r.y1 - r.y0);
                    const double half_w =
                        rx * (kTriApexPlateau +
                              (1.0 - kTriApexPlateau) * std::pow(depth, kTriFlankExponent));
                    inside = std::abs(px - cx) <= half_w;
                    break;
                }
            }
            if (inside) img.set(x, y, color);
        }
    }
}

}  // namespace

Image render_scene(const std::vector<ShapeSpec>& shapes, int background,
                   const Palette& palette, int image_size) {
    Image img(image_size, image_size, palette.colors[background]);
    for (const auto& s : shapes) draw_shape(img, s, palette);
    return img;
}

Scene sample_scene(uint64_t seed, const SceneConfig& config, const Palette& palette) {
    config.validate(palette);
    Rng rng(mix_seed(seed, 0x5ce9e));
    Scene scene;
    scene.seed = seed;
    scene.background = palette.index_of(config.background);

    const int n = static_cast<int>(rng.next_range(config.min_shapes, config.max_shapes));

    // distinct colors via a partial shuffle of the configured list
    std::vector<int> color_pool(config.shape_colors.size());
    for (size_t i = 0; i < color_pool.size(); ++i)
        color_pool[i] = palette.index_of(config.shape_colors[i]);
    for (int i = 0; i < n; ++i) {
        const auto j = i + static_cast<int>(rng.next_below(color_pool.size() - i));
        std::swap(color_pool[i], color_pool[j]);
    }

    auto snap = [&config](int v) { return v / config.coord_step * config.coord_step; };

    // crowded scenes draw from the lower end of the size range
    const int eff_max = n >= 4 ? std::min(config.max_size, std::max(config.min_size, 370))
                       : n == 3 ? std::min(config.max_size, std::max(config.min_size, 400))
                                : config.max_size;

    // Rejection sampling with a guided proposal: one or two shapes propose
    // anywhere on the canvas; three or four shapes propose inside disjoint
    // jittered split regions, which keeps the acceptance rate high enough for
    // the budget. Every proposal still passes the non-overlap check.
    struct Region {
        int x0, y0, x1, y1;
    };
    const int half_margin = (config.margin + 1) / 2;
    auto make_regions = [&]() {
        std::vector<Region> regions;
        if (n <= 2) {
            for (int i = 0; i < n; ++i) regions.push_back({0, 0, 1000, 1000});
        } else {
            const int sx = snap(static_cast<int>(rng.next_range(460, 540)));
            const int sy = snap(static_cast<int>(rng.next_range(460, 540)));
            if (n == 4) {
                regions = {{0, 0, sx - half_margin, sy - half_margin},
                           {sx + half_margin, 0, 1000, sy - half_margin},
                           {0, sy + half_margin, sx - half_margin, 1000},
                           {sx + half_margin, sy + half_margin, 1000, 1000}};
            } else {
                // two stacked cells on one side, a full column on the other
                regions = {{0, 0, sx - half_margin, sy - half_margin},
                           {0, sy + half_margin, sx - half_margin, 1000},
                           {sx + half_margin, 0, 1000, 1000}};
            }
            for (int i = n - 1; i > 0; --i) {
                const auto j = rng.next_below(static_cast<uint64_t>(i) + 1);
                std::swap(regions[i], regions[static_cast<size_t>(j)]);
            }
        }
        return regions;
    };

    int proposals = 0;
    const int per_shape_tries = n <= 2 ? 50 : 25;
    std::vector<ShapeSpec> shapes;
    std::vector<ShapeKind> kinds(n);
    for (int i = 0; i < n; ++i) kinds[i] = static_cast<ShapeKind>(rng.next_below(3));
    std::vector<Region> regions = make_regions();
    while (static_cast<int>(shapes.size()) < n) {
        const int i = static_cast<int>(shapes.size());
        bool placed = false;
        for (int tries = 0; tries < per_shape_tries; ++tries) {
            if (++proposals > config.max_attempts)
                throw std::runtime_error(
                    "scene placement budget exhausted; try fewer or smaller shapes");
            const Region& reg = regions[i];
            const int max_w = std::min(eff_max, reg.x1 - reg.x0);
            const int max_h = std::min(eff_max, reg.y1 - reg.y0);
            if (max_w < config.min_size || max_h < config.min_size) break;
            ShapeSpec s;
            s.kind = kinds[i];
            s.color = color_pool[i];
            const int w = snap(static_cast<int>(rng.next_range(config.min_size, max_w)));
            const int aspect =
                static_cast<int>(rng.next_range(config.aspect_pct_min, config.aspect_pct_max));
            const int h = std::clamp(snap(w * aspect / 100), config.min_size, max_h);
            s.box.x0 = snap(static_cast<int>(rng.next_range(reg.x0, reg.x1 - w)));
            s.box.y0 = snap(static_cast<int>(rng.next_range(reg.y0, reg.y1 - h)));
            s.box.x1 = s.box.x0 + w;
            s.box.y1 = s.box.y0 + h;
            bool ok = true;
            if (!config.allow_overlap) {
                for (const auto& prev : shapes) {
                    if (boxes_too_close(prev.box, s.box, config.margin)) {
                        ok = false;
                        break;
                    }
                }
            }
            if (ok) {
                shapes.push_back(s);
                placed = true;
                break;
            }
        }
        if (!placed) {  // wedged; restart with fresh regions within the budget
            shapes.clear();
            regions = make_regions();
            if (proposals >= config.max_attempts)
                throw std::runtime_error(
                    "scene placement budget exhausted; try fewer or smaller shapes");
        }
    }
    scene.shapes = std::move(shapes);

    std::vector<std::string> captions;
    for (const auto& s : scene.shapes) {
        captions.push_back(shape_caption(s, palette));
        scene.layout.elements.push_back({captions.back(), {s.box}});
    }
    scene.global_caption = make_scene_caption(captions, config.background);
    scene.image = render_scene(scene.shapes, scene.background, palette, config.image_size);
    return scene;
}

Layout oracle_detect(const Image& image, const Palette& palette, int background) {
    const int w = image.width, h = image.height;
    std::vector<int> index(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Rgb c = image.get(x, y);
            index[static_cast<size_t>(y) * w + x] = palette.nearest(c.r, c.g, c.b);
        }
    }

    Layout out;
    std::vector<char> visited(static_cast<size_t>(w) * h, 0);
    std::deque<std::pair<int, int>> queue;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const size_t start = static_cast<size_t>(sy) * w + sx;
            if (visited[start] || index[start] == background) continue;
            const int color = index[start];
            int x0 = sx, x1 = sx, y0 = sy, y1 = sy;
            long long area = 0;
            visited[start] = 1;
            queue.push_back({sx, sy});
            while (!queue.empty()) {
                const auto [x, y] = queue.front();
                queue.pop_front();
                ++area;
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
                const int nx[4] = {x - 1, x + 1, x, x};
                const int ny[4] = {y, y, y - 1, y + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nx[k] < 0 || nx[k] >= w || ny[k] < 0 || ny[k] >= h) continue;
                    const size_t o = static_cast<size_t>(ny[k]) * w + nx[k];
                    if (visited[o] || index[o] != color) continue;
                    visited[o] = 1;
                    queue.push_back({nx[k], ny[k]});
                }
            }

            const double fill = static_cast<double>(area) /
                                (static_cast<double>(x1 - x0 + 1) * (y1 - y0 + 1));
            const char* kind = "unknown";
            if (fill >= 0.9) kind = "square";
            else if (fill >= 0.65) kind = "circle";
            else if (fill >= 0.35) kind = "triangle";

            LayoutElement el;
            el.caption = "a " + palette.names[color] + " " + kind;
            el.boxes.push_back(normalize_bbox(x0, y0, x1 + 1, y1 + 1, w, h));
            out.elements.push_back(std::move(el));
        }
    }
    return out;
}

RemovalCase build_removal_case(const Scene& scene, size_t victim_index,
                               const Palette& palette, int grid) {
    if (victim_index >= scene.shapes.size())
        throw std::out_of_range("victim index out of range");
    RemovalCase rc;
    rc.original = encode_image(scene.image, palette, grid);
    rc.negative_caption = scene.global_caption;
    rc.negative_layout = scene.layout;
    rc.victim = scene.layout.elements[victim_index];

    std::vector<std::string> captions;
    const std::string& bg = palette.names[scene.background];
    for (size_t i = 0; i < scene.shapes.size(); ++i) {
        if (i == victim_index) continue;
        captions.push_back(shape_caption(scene.shapes[i], palette));
        rc.target_layout.elements.push_back({captions.back(), {scene.shapes[i].box}});
    }
    rc.target_caption = make_scene_caption(captions, bg);
    return rc;
}

namespace {

nlohmann::json record_to_json(const SceneRecord& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["global_caption"] = r.global_caption;
    j["layout"] = nlohmann::json::parse(layout_record_to_json(r.global_caption, r.layout));
    j["image_tokens"] = r.image_tokens.cells;
    if (!r.png_path.empty()) j["png_path"] = r.png_path;
    return j;
}

SceneRecord record_from_json(const nlohmann::json& j, int grid) {
    SceneRecord r;
    r.seed = j.at("seed").get<uint64_t>();
    r.global_caption = j.at("global_caption").get<std::string>();
    r.layout = layout_record_from_json(j.at("layout").dump()).second;
    r.image_tokens.grid = grid;
    r.image_tokens.cells = j.at("image_tokens").get<std::vector<int32_t>>();
    if (r.image_tokens.cells.size() != static_cast<size_t>(grid) * grid)
        throw std::runtime_error("image_tokens length does not match the manifest grid");
    if (j.contains("png_path")) r.png_path = j.at("png_path").get<std::string>();
    return r;
}

}  // namespace

// Dataset generation survives rare placement-budget failures by salting the
// record seed deterministically, so the manifest still reproduces the corpus.
Scene sample_scene_with_retry(uint64_t dataset_seed, uint64_t index,
                              const SceneConfig& config, const Palette& palette) {
    for (uint64_t salt = 0;; ++salt) {
        try {
            return sample_scene(mix_seed(dataset_seed, index, salt), config, palette);
        } catch (const std::runtime_error&) {
            if (salt >= 8) throw;
        }
    }
}

SceneRecord scene_to_record(const Scene& scene, const Palette& palette, int grid) {
    SceneRecord r;
    r.seed = scene.seed;
    r.global_caption = scene.global_caption;
    r.layout = scene.layout;
    r.image_tokens = encode_image(scene.image, palette, grid);
    return r;
}

void write_dataset(const std::string& dir, uint64_t seed, uint64_t count,
                   const SceneConfig& config, const Palette& palette, bool write_pngs) {
    config.validate(palette);
    fs::create_directories(dir);
    if (write_pngs) fs::create_directories(fs::path(dir) / "png");

    nlohmann::json manifest;
    manifest["seed"] = seed;
    manifest["count"] = count;
    manifest["config_hash"] = config.hash();
    manifest["config"] = nlohmann::json::parse(config.to_json());
    {
        std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
        mf << manifest.dump(2) << "\n";
    }

    std::ofstream rf(fs::path(dir) / "records.ndjson", std::ios::trunc);
    if (!rf) throw std::runtime_error("cannot write dataset records in " + dir);
    for (uint64_t i = 0; i < count; ++i) {
        const Scene scene = sample_scene_with_retry(seed, i, config, palette);
        SceneRecord rec = scene_to_record(scene, palette, config.grid);
        if (write_pngs) {
            rec.png_path = "png/" + std::to_string(i) + ".png";
            write_png(scene.image, (fs::path(dir) / rec.png_path).string());
        }
        rf << record_to_json(rec).dump() << "\n";
    }
}

DatasetManifest read_manifest(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("missing manifest.json in " + dir);
    nlohmann::json j;
    mf >> j;
    DatasetManifest m;
    m.seed = j.at("seed").get<uint64_t>();
    m.count = j.at("count").get<uint64_t>();
    m.config_hash = j.at("config_hash").get<uint64_t>();
    m.config = SceneConfig::from_json(j.at("config").dump());
    if (m.config.hash() != m.config_hash)
        throw std::runtime_error("manifest config hash mismatch in " + dir);
    return m;
}

std::vector<SceneRecord> read_dataset(const std::string& dir) {
    const DatasetManifest m = read_manifest(dir);
    std::ifstream rf(fs::path(dir) / "records.ndjson");
    if (!rf) throw std::runtime_error("missing records.ndjson in " + dir);
    std::vector<SceneRecord> out;
    std::string line;
    while (std::getline(rf, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(nlohmann::json::parse(line), m.config.grid));
    }
    if (out.size() != m.count)
        throw std::runtime_error("dataset record count does not match the manifest");
    return out;
}

}  // namespace plangen
