// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "farfield/signal.hpp"

namespace farfield {

// Little-endian RIFF WAV. Supported sample formats: PCM 16-bit (format 1)
// and IEEE float 32 (format 3), any channel count. The reader normalizes
// PCM to +-1.0 full scale; the writer emits float-32 unless asked for PCM.

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail

inline TimeSignal read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_wav: cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw ConfigError("read_wav: not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  size_t data_off = 0, data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    std::uint32_t chunk_len = detail::read_u32(buf.data() + pos + 4);
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0 && chunk_len >= 16) {
      const unsigned char* p = buf.data() + pos + 8;
      format = detail::read_u16(p);
      channels = detail::read_u16(p + 2);
      rate = detail::read_u32(p + 4);
      bits = detail::read_u16(p + 14);
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = std::min<size_t>(chunk_len, buf.size() - data_off);
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (channels == 0 || rate == 0 || data_off == 0)
    throw ConfigError("read_wav: missing fmt/data chunk: " + path);

  long frames;
  Eigen::MatrixXd samples;
  const unsigned char* d = buf.data() + data_off;
  if (format == 1 && bits == 16) {
    frames = static_cast<long>(data_len / (2 * channels));
    samples.resize(channels, frames);
    for (long i = 0; i < frames; ++i)
      for (int m = 0; m < channels; ++m) {
        std::int16_t v = static_cast<std::int16_t>(detail::read_u16(d + (i * channels + m) * 2));
        samples(m, i) = v / 32768.0;
      }
  } else if (format == 3 && bits == 32) {
    frames = static_cast<long>(data_len / (4 * channels));
    samples.resize(channels, frames);
    for (long i = 0; i < frames; ++i)
      for (int m = 0; m < channels; ++m) {
        std::uint32_t u = detail::read_u32(d + (i * channels + m) * 4);
        float f;
        std::memcpy(&f, &u, 4);
        samples(m, i) = f;
      }
  } else {
    throw ConfigError("read_wav: unsupported format (want PCM16 or float32): " + path);
  }
  if (frames == 0) throw ConfigError("read_wav: empty data chunk: " + path);
  return TimeSignal(std::move(samples), static_cast<int>(rate));
}

enum class WavFormat { Float32, Pcm16 };

inline void write_wav(const std::string& path, const TimeSignal& signal,
                      WavFormat format = WavFormat::Float32) {
  signal.validate();
  const int M = signal.channels();
  const long L = signal.length();
  const int bytes = format == WavFormat::Float32 ? 4 : 2;
  const std::uint32_t data_len = static_cast<std::uint32_t>(L * M * bytes);

  std::string out;
  out.reserve(44 + data_len + (format == WavFormat::Float32 ? 14 : 0));
  out += "RIFF";
  // fact chunk required for non-PCM formats
  const std::uint32_t extra = format == WavFormat::Float32 ? 12 : 0;
  detail::put_u32(out, 36 + extra + data_len);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, format == WavFormat::Float32 ? 3 : 1);
  detail::put_u16(out, static_cast<std::uint16_t>(M));
  detail::put_u32(out, static_cast<std::uint32_t>(signal.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(signal.sample_rate) * M * bytes);
  detail::put_u16(out, static_cast<std::uint16_t>(M * bytes));
  detail::put_u16(out, static_cast<std::uint16_t>(bytes * 8));
  if (format == WavFormat::Float32) {
    out += "fact";
    detail::put_u32(out, 4);
    detail::put_u32(out, static_cast<std::uint32_t>(L));
  }
  out += "data";
  detail::put_u32(out, data_len);
  for (long i = 0; i < L; ++i)
    for (int m = 0; m < M; ++m) {
      if (format == WavFormat::Float32) {
        float f = static_cast<float>(signal.samples(m, i));
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        detail::put_u32(out, u);
      } else {
        double v = std::clamp(signal.samples(m, i), -1.0, 1.0);
        auto q = static_cast<std::int32_t>(std::lrint(v * 32767.0));
        detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      }
    }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("write_wav: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw ConfigError("write_wav: short write: " + path);
}

}  // namespace farfield
