// Copyright 2026 The farfield authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "farfield/common.hpp"
#include "farfield/masks.hpp"
#include "farfield/stft.hpp"

namespace farfield {

// Binary tensor file: magic "FFTB", u32 version (1), u32 dtype, u32 ndim,
// u64 dims[ndim], then the payload row-major, little-endian. Masks are
// written as float32 with dims [C, T, F]; spectrograms as complex128 with
// dims [T, F, M].
enum class TensorDtype : std::uint32_t { F32 = 0, F64 = 1, C64 = 2, C128 = 3 };

struct Tensor {
  TensorDtype dtype = TensorDtype::F32;
  std::vector<std::uint64_t> dims;
  std::vector<double> real_data;  // F32/F64 payloads
  std::vector<cd> complex_data;   // C64/C128 payloads

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

namespace detail {

template <typename T>
void write_raw(std::ofstream& out, const T* p, size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
void read_raw(std::ifstream& in, T* p, size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(T)));
}

}  // namespace detail

inline void write_tensor(const std::string& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_tensor: cannot open " + path);
  out.write("FFTB", 4);
  std::uint32_t version = 1, dtype = static_cast<std::uint32_t>(tensor.dtype),
                ndim = static_cast<std::uint32_t>(tensor.dims.size());
  detail::write_raw(out, &version, 1);
  detail::write_raw(out, &dtype, 1);
  detail::write_raw(out, &ndim, 1);
  detail::write_raw(out, tensor.dims.data(), tensor.dims.size());
  const std::uint64_t n = tensor.element_count();
  switch (tensor.dtype) {
    case TensorDtype::F32: {
      std::vector<float> buf(tensor.real_data.begin(), tensor.real_data.end());
      detail::write_raw(out, buf.data(), n);
      break;
    }
    case TensorDtype::F64:
      detail::write_raw(out, tensor.real_data.data(), n);
      break;
    case TensorDtype::C64: {
      std::vector<std::complex<float>> buf(tensor.complex_data.begin(),
                                           tensor.complex_data.end());
      detail::write_raw(out, buf.data(), n);
      break;
    }
    case TensorDtype::C128:
      detail::write_raw(out, tensor.complex_data.data(), n);
      break;
  }
  if (!out) throw ConfigError("write_tensor: short write: " + path);
}

inline Tensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("read_tensor: cannot open " + path);
  char magic[4];
  detail::read_raw(in, magic, 4);
  if (std::string(magic, 4) != "FFTB") throw ConfigError("read_tensor: bad magic: " + path);
  std::uint32_t version = 0, dtype = 0, ndim = 0;
  detail::read_raw(in, &version, 1);
  detail::read_raw(in, &dtype, 1);
  detail::read_raw(in, &ndim, 1);
  if (version != 1) throw ConfigError("read_tensor: unsupported version");
  if (dtype > 3 || ndim > 16) throw ConfigError("read_tensor: corrupt header");
  Tensor t;
  t.dtype = static_cast<TensorDtype>(dtype);
  t.dims.resize(ndim);
  detail::read_raw(in, t.dims.data(), ndim);
  const std::uint64_t n = t.element_count();
  switch (t.dtype) {
    case TensorDtype::F32: {
      std::vector<float> buf(n);
      detail::read_raw(in, buf.data(), n);
      t.real_data.assign(buf.begin(), buf.end());
      break;
    }
    case TensorDtype::F64:
      t.real_data.resize(n);
      detail::read_raw(in, t.real_data.data(), n);
      break;
    case TensorDtype::C64: {
      std::vector<std::complex<float>> buf(n);
      detail::read_raw(in, buf.data(), n);
      t.complex_data.assign(buf.begin(), buf.end());
      break;
    }
    case TensorDtype::C128:
      t.complex_data.resize(n);
      detail::read_raw(in, t.complex_data.data(), n);
      break;
  }
  if (!in) throw ConfigError("read_tensor: truncated file: " + path);
  return t;
}

inline void write_mask_tensor(const std::string& path, const MaskSet& masks) {
  Tensor t;
  t.dtype = TensorDtype::F32;
  t.dims = {static_cast<std::uint64_t>(masks.num_classes()),
            static_cast<std::uint64_t>(masks.frames()),
            static_cast<std::uint64_t>(masks.bins())};
  t.real_data = masks.raw();
  write_tensor(path, t);
}

inline void write_spectrogram_tensor(const std::string& path, const ComplexSpectrogram& spec) {
  Tensor t;
  t.dtype = TensorDtype::C128;
  t.dims = {static_cast<std::uint64_t>(spec.frames()), static_cast<std::uint64_t>(spec.bins()),
            static_cast<std::uint64_t>(spec.channels())};
  t.complex_data.reserve(t.element_count());
  for (int tt = 0; tt < spec.frames(); ++tt)
    for (int f = 0; f < spec.bins(); ++f)
      for (int m = 0; m < spec.channels(); ++m) t.complex_data.push_back(spec.at(tt, f, m));
  write_tensor(path, t);
}

inline void write_weights_tensor(const std::string& path, const Eigen::MatrixXcd& w) {
  Tensor t;
  t.dtype = TensorDtype::C128;
  t.dims = {static_cast<std::uint64_t>(w.rows()), static_cast<std::uint64_t>(w.cols())};
  t.complex_data.reserve(t.element_count());
  for (long f = 0; f < w.rows(); ++f)
    for (long m = 0; m < w.cols(); ++m) t.complex_data.push_back(w(f, m));
  write_tensor(path, t);
}

inline void write_feature_tensor(const std::string& path, const Eigen::MatrixXd& features) {
  Tensor t;
  t.dtype = TensorDtype::F32;
  t.dims = {static_cast<std::uint64_t>(features.rows()),
            static_cast<std::uint64_t>(features.cols())};
  t.real_data.reserve(t.element_count());
  for (long r = 0; r < features.rows(); ++r)
    for (long c = 0; c < features.cols(); ++c) t.real_data.push_back(features(r, c));
  write_tensor(path, t);
}

}  // namespace farfield
