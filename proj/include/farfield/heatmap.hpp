// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "farfield/masks.hpp"

namespace farfield {

namespace detail {

inline void png_put_u32be(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

inline void png_chunk(std::string& out, const char* type, const std::string& payload) {
  png_put_u32be(out, static_cast<std::uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
  png_put_u32be(out, crc);
}

}  // namespace detail

// 8-bit grayscale PNG, rows top to bottom.
inline void write_png_gray(const std::string& path, const std::vector<std::uint8_t>& pixels,
                           int width, int height) {
  if (width < 1 || height < 1 || pixels.size() != static_cast<size_t>(width) * height)
    throw ConfigError("write_png_gray: bad image dimensions");

  // filter byte 0 per scanline
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (width + 1));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), pixels.begin() + static_cast<size_t>(y) * width,
               pixels.begin() + static_cast<size_t>(y + 1) * width);
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw NumericalError("write_png_gray: deflate failed");

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::png_put_u32be(ihdr, static_cast<std::uint32_t>(width));
  detail::png_put_u32be(ihdr, static_cast<std::uint32_t>(height));
  ihdr += '\x08';  // bit depth
  ihdr += '\x00';  // grayscale
  ihdr += '\x00';
  ihdr += '\x00';
  ihdr += '\x00';
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT",
                    std::string(reinterpret_cast<char*>(comp.data()), comp_len));
  detail::png_chunk(out, "IEND", "");

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("write_png_gray: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

// Mask heatmap: frequency on the vertical axis (low bins at the bottom),
// frames left to right, brightness = mask value.
inline void write_mask_png(const std::string& path, const MaskSet& masks, int class_index) {
  if (class_index < 0 || class_index >= masks.num_classes())
    throw ConfigError("write_mask_png: bad class index");
  const int T = masks.frames();
  const int F = masks.bins();
  std::vector<std::uint8_t> pixels(static_cast<size_t>(T) * F);
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t) {
      double v = std::clamp(masks.at(class_index, t, f), 0.0, 1.0);
      pixels[static_cast<size_t>(F - 1 - f) * T + t] = static_cast<std::uint8_t>(v * 255.0 + 0.5);
    }
  write_png_gray(path, pixels, T, F);
}

}  // namespace farfield
