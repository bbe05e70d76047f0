#include "plangen/image.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <zlib.h>

namespace plangen {

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("image dimensions must be positive");
    pixels.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = fill.r;
        pixels[i + 1] = fill.g;
        pixels[i + 2] = fill.b;
    }
}

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    return data;
}

void write_file(const std::string& path, const uint8_t* data, size_t size) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_ppm(const Image& image, const std::string& path) {
    std::ostringstream header;
    header << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<uint8_t> out;
    const std::string h = header.str();
    out.insert(out.end(), h.begin(), h.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    write_file(path, out.data(), out.size());
}

Image read_ppm(const std::string& path) {
    const auto data = read_file(path);
    std::istringstream in(std::string(data.begin(), data.end()));
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0)
        throw std::runtime_error("unsupported PPM: " + path);
    in.get();  // single whitespace after maxval
    Image img(w, h);
    const size_t offset = static_cast<size_t>(in.tellg());
    if (data.size() < offset + img.pixels.size())
        throw std::runtime_error("truncated PPM: " + path);
    std::memcpy(img.pixels.data(), data.data() + offset, img.pixels.size());
    return img;
}

namespace {

uint32_t crc32_of(const uint8_t* data, size_t size, uint32_t seed = 0) {
    return static_cast<uint32_t>(
        ::crc32(seed, data, static_cast<uInt>(size)));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void put_chunk(std::vector<uint8_t>& out, const char type[4],
               const std::vector<uint8_t>& payload) {
    put_u32(out, static_cast<uint32_t>(payload.size()));
    std::vector<uint8_t> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    out.insert(out.end(), body.begin(), body.end());
    put_u32(out, crc32_of(body.data(), body.size()));
}

const uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

std::vector<uint8_t> zlib_compress(const std::vector<uint8_t>& in) {
    uLongf bound = compressBound(static_cast<uLong>(in.size()));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, in.data(), static_cast<uLong>(in.size()), 6) != Z_OK)
        throw std::runtime_error("zlib compress failed");
    out.resize(bound);
    return out;
}

std::vector<uint8_t> zlib_decompress(const uint8_t* data, size_t size, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf dst = static_cast<uLongf>(expected);
    if (uncompress(out.data(), &dst, data, static_cast<uLong>(size)) != Z_OK ||
        dst != expected)
        throw std::runtime_error("zlib decompress failed");
    return out;
}

}  // namespace

void write_png(const Image& image, const std::string& path) {
    std::vector<uint8_t> out(kPngSig, kPngSig + 8);

    std::vector<uint8_t> ihdr;
    put_u32(ihdr, static_cast<uint32_t>(image.width));
    put_u32(ihdr, static_cast<uint32_t>(image.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // no interlace
    put_chunk(out, "IHDR", ihdr);

    // filter byte 0 (None) per scanline
    const size_t stride = static_cast<size_t>(image.width) * 3;
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * image.height);
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);
        const uint8_t* row = image.pixels.data() + stride * y;
        raw.insert(raw.end(), row, row + stride);
    }
    put_chunk(out, "IDAT", zlib_compress(raw));
    put_chunk(out, "IEND", {});
    write_file(path, out.data(), out.size());
}

Image read_png(const std::string& path) {
    const auto data = read_file(path);
    if (data.size() < 8 || std::memcmp(data.data(), kPngSig, 8) != 0)
        throw std::runtime_error("not a PNG: " + path);

    int width = 0, height = 0, bit_depth = 0, color_type = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    while (pos + 8 <= data.size()) {
        const uint32_t len = get_u32(&data[pos]);
        if (pos + 12 + len > data.size()) throw std::runtime_error("truncated PNG: " + path);
        const std::string type(reinterpret_cast<const char*>(&data[pos + 4]), 4);
        const uint8_t* payload = &data[pos + 8];
        if (type == "IHDR") {
            width = static_cast<int>(get_u32(payload));
            height = static_cast<int>(get_u32(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            if (payload[12] != 0) throw std::runtime_error("interlaced PNG unsupported");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (width <= 0 || height <= 0) throw std::runtime_error("bad PNG header: " + path);
    if (bit_depth != 8 || (color_type != 2 && color_type != 6))
        throw std::runtime_error("unsupported PNG format (need 8-bit RGB/RGBA): " + path);

    const int channels = color_type == 2 ? 3 : 4;
    const size_t stride = static_cast<size_t>(width) * channels;
    const auto raw = zlib_decompress(idat.data(), idat.size(), (stride + 1) * height);

    // undo per-scanline filters
    std::vector<uint8_t> flat(stride * height);
    for (int y = 0; y < height; ++y) {
        const uint8_t filter = raw[(stride + 1) * y];
        const uint8_t* src = &raw[(stride + 1) * y + 1];
        uint8_t* dst = &flat[stride * y];
        const uint8_t* up = y > 0 ? &flat[stride * (y - 1)] : nullptr;
        for (size_t x = 0; x < stride; ++x) {
            const int a = x >= static_cast<size_t>(channels) ? dst[x - channels] : 0;
            const int b = up ? up[x] : 0;
            const int c = (up && x >= static_cast<size_t>(channels)) ? up[x - channels] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: {
                    const int p = a + b - c;
                    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    v += (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                    break;
                }
                default: throw std::runtime_error("unknown PNG filter");
            }
            dst[x] = static_cast<uint8_t>(v);
        }
    }

    Image img(width, height);
    if (channels == 3) {
        img.pixels = std::move(flat);
    } else {
        for (size_t i = 0, j = 0; i < flat.size(); i += 4, j += 3) {
            img.pixels[j] = flat[i];
            img.pixels[j + 1] = flat[i + 1];
            img.pixels[j + 2] = flat[i + 2];
        }
    }
    return img;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void write_image(const Image& image, const std::string& path) {
    if (ends_with(path, ".ppm")) {
        write_ppm(image, path);
    } else if (ends_with(path, ".png")) {
        write_png(image, path);
    } else {
        throw std::invalid_argument("unsupported image extension: " + path);
    }
}

Image read_image(const std::string& path) {
    if (ends_with(path, ".ppm")) return read_ppm(path);
    if (ends_with(path, ".png")) return read_png(path);
    throw std::invalid_argument("unsupported image extension: " + path);
}

}  // namespace plangen
