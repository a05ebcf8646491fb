#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "drt/render.hpp"

namespace drt {

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// --- PFM: the exact HDR carrier (32-bit float RGB, scale -1 = little endian)

inline void write_image_pfm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_image_pfm: cannot open '" + path + "'");
    out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    // Scanlines run bottom to top.
    std::vector<float> row(size_t(img.width) * 3);
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x) {
            const Spectrum& p = img.at(x, y);
            row[size_t(x) * 3 + 0] = float(p.r);
            row[size_t(x) * 3 + 1] = float(p.g);
            row[size_t(x) * 3 + 2] = float(p.b);
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  std::streamsize(row.size() * sizeof(float)));
    }
    if (!out) throw IoError("write_image_pfm: write failed for '" + path + "'");
}

inline Image read_image_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_image_pfm: cannot open '" + path + "'");
    std::vector<char> data((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());

    size_t pos = 0;
    const auto next_token = [&]() -> std::string {
        while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        const size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        if (start == pos) throw IoError("read_image_pfm: malformed header in '" + path + "'");
        return std::string(data.begin() + start, data.begin() + pos);
    };

    const std::string magic = next_token();
    if (magic == "Pf")
        throw IoError("read_image_pfm: grayscale PFM is not supported ('" + path + "')");
    if (magic != "PF")
        throw IoError("read_image_pfm: not a PFM file ('" + path + "')");

    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        scale = std::stod(next_token());
    } catch (const std::exception&) {
        throw IoError("read_image_pfm: malformed header in '" + path + "'");
    }
    if (width < 1 || height < 1)
        throw IoError("read_image_pfm: bad dimensions in '" + path + "'");
    if (scale > 0.0)
        throw IoError("read_image_pfm: big-endian PFM (positive scale) is not supported ('" +
                      path + "')");

    ++pos;  // exactly one whitespace byte separates header and payload
    const size_t expected = size_t(width) * size_t(height) * 3 * sizeof(float);
    if (data.size() - pos < expected)
        throw IoError("read_image_pfm: truncated payload in '" + path + "'");

    Image img(width, height);
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            float rgb[3];
            std::memcpy(rgb, data.data() + pos, sizeof(rgb));
            pos += sizeof(rgb);
            img.at(x, y) = Spectrum{double(rgb[0]), double(rgb[1]), double(rgb[2])};
        }
    }
    return img;
}

// --- PNG: 8-bit sRGB preview only; never an input to metrics.

// clamp to [0,1], gamma 1/2.2, round half up
inline uint8_t srgb_encode(double v) {
    if (!(v > 0.0)) return 0;
    if (v > 1.0) v = 1.0;
    const double enc = std::floor(255.0 * std::pow(v, 1.0 / 2.2) + 0.5);
    return enc >= 255.0 ? uint8_t(255) : uint8_t(enc);
}

namespace detail {

inline void png_chunk(std::string& out, const char type[4], const std::string& payload) {
    const auto be32 = [](uint32_t v) {
        char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
        return std::string(b, 4);
    };
    out += be32(uint32_t(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    const uLong crc =
        ::crc32(0L, reinterpret_cast<const Bytef*>(body.data()), uInt(body.size()));
    out += be32(uint32_t(crc));
}

}  // namespace detail

inline void write_image_png(const Image& img, const std::string& path) {
    const auto be32 = [](uint32_t v) {
        char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
        return std::string(b, 4);
    };

    // Raw scanlines, filter type 0 per row.
    std::vector<Bytef> raw;
    raw.reserve(size_t(img.height) * (size_t(img.width) * 3 + 1));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        for (int x = 0; x < img.width; ++x) {
            const Spectrum& p = img.at(x, y);
            raw.push_back(srgb_encode(p.r));
            raw.push_back(srgb_encode(p.g));
            raw.push_back(srgb_encode(p.b));
        }
    }

    uLongf bound = ::compressBound(uLong(raw.size()));
    std::vector<Bytef> compressed(bound);
    if (::compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 6) != Z_OK)
        throw IoError("write_image_png: deflate failed");
    compressed.resize(bound);

    std::string ihdr = be32(uint32_t(img.width)) + be32(uint32_t(img.height));
    ihdr += char(8);  // bit depth
    ihdr += char(2);  // truecolor
    ihdr += char(0);  // compression
    ihdr += char(0);  // filter
    ihdr += char(0);  // interlace

    std::string file("\x89PNG\r\n\x1a\n", 8);
    detail::png_chunk(file, "IHDR", ihdr);
    detail::png_chunk(file, "IDAT",
                      std::string(reinterpret_cast<const char*>(compressed.data()),
                                  compressed.size()));
    detail::png_chunk(file, "IEND", "");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_image_png: cannot open '" + path + "'");
    out.write(file.data(), std::streamsize(file.size()));
    if (!out) throw IoError("write_image_png: write failed for '" + path + "'");
}

}  // namespace drt
