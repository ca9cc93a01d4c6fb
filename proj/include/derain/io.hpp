// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary formats, all little-endian and headerless:
//   .bin    16 bytes per point: float32 x, y, z, intensity
//   .label  4 bytes per point: uint32, low 16 bits class ID, high 16 bits zero
//   .mask   1 byte per point: 0 or 1

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "derain/core.hpp"

namespace derain {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[off + b]) << (8 * b);
  return v;
}

inline void put_f32(Bytes& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline float get_f32(std::span<const std::uint8_t> in, std::size_t off) {
  return std::bit_cast<float>(get_u32(in, off));
}

}  // namespace detail

inline Bytes write_cloud(const PointCloud& cloud) {
  validate_cloud(cloud);
  Bytes out;
  out.reserve(cloud.size() * 16);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.coords[i];
    const float xyz[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                          static_cast<float>(p.z())};
    for (float v : xyz) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteCoordinate, "exceeds float range", i);
      detail::put_f32(out, v);
    }
    detail::put_f32(out, static_cast<float>(cloud.intensity[i]));
  }
  return out;
}

inline PointCloud read_cloud(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 16 != 0) {
    throw Error(ErrorCode::TruncatedFile,
                "cloud file length " + std::to_string(bytes.size()) + " is not a multiple of 16");
  }
  PointCloud cloud;
  const std::size_t n = bytes.size() / 16;
  cloud.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = i * 16;
    const Vec3 p{detail::get_f32(bytes, off), detail::get_f32(bytes, off + 4),
                 detail::get_f32(bytes, off + 8)};
    if (!p.allFinite()) throw Error(ErrorCode::NonFiniteCoordinate, "", i);
    const double intensity = detail::get_f32(bytes, off + 12);
    if (!(intensity >= 0.0 && intensity <= 1.0)) {
      throw Error(ErrorCode::IntensityOutOfRange, "", i);
    }
    cloud.push_back(p, intensity);
  }
  return cloud;
}

inline Bytes write_labels(const LabelSet& labels) {
  Bytes out;
  out.reserve(labels.size() * 4);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto id = static_cast<std::uint32_t>(labels[i]);
    if (!is_valid_class(id)) throw Error(ErrorCode::InvalidClass, "", i);
    detail::put_u32(out, id);
  }
  return out;
}

inline LabelSet read_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorCode::TruncatedFile,
                "label file length " + std::to_string(bytes.size()) + " is not a multiple of 4");
  }
  LabelSet labels(bytes.size() / 4);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint32_t v = detail::get_u32(bytes, i * 4);
    if (!is_valid_class(v)) throw Error(ErrorCode::InvalidClass, "", i);
    labels[i] = static_cast<SemanticClass>(v);
  }
  return labels;
}

inline Bytes write_mask(const Mask& mask) {
  Bytes out(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1 : 0;
  return out;
}

inline Mask read_mask(std::span<const std::uint8_t> bytes) {
  Mask mask(bytes.begin(), bytes.end());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] > 1) throw Error(ErrorCode::InvalidInput, "mask bytes must be 0 or 1", i);
  }
  return mask;
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open '" + path.string() + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace derain
