// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace derain {

enum class ErrorCode {
  LengthMismatch,
  NonFiniteCoordinate,
  IntensityOutOfRange,
  InvalidInput,
  InvalidCalibration,
  OriginPoint,
  EmptyTable,
  EmptyCalibration,
  UnknownScene,
  InvalidSpec,
  InvalidConfig,
  NonPositiveRate,
  DegenerateBounds,
  LabelLengthMismatch,
  EmptyIndex,
  TooFewPoints,
  TooLarge,
  NoValidHypothesis,
  DegeneratePolygon,
  EmptySource,
  EmptyDataset,
  EmptySearchSpace,
  TruncatedFile,
  InvalidClass,
  SchemaError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::IntensityOutOfRange: return "IntensityOutOfRange";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidCalibration: return "InvalidCalibration";
    case ErrorCode::OriginPoint: return "OriginPoint";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::EmptyCalibration: return "EmptyCalibration";
    case ErrorCode::UnknownScene: return "UnknownScene";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::DegenerateBounds: return "DegenerateBounds";
    case ErrorCode::LabelLengthMismatch: return "LabelLengthMismatch";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NoValidHypothesis: return "NoValidHypothesis";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptySearchSpace: return "EmptySearchSpace";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::InvalidClass: return "InvalidClass";
    case ErrorCode::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a code and,
/// where the failure concerns one element, the index of the first offender.
/// Schema failures carry a JSON pointer instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<std::size_t> index = std::nullopt, std::string path = {})
      : std::runtime_error(compose(code, message, index, path)),
        code_(code),
        index_(index),
        path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }
  const std::string& path() const noexcept { return path_; }

 private:
  static std::string compose(ErrorCode code, const std::string& message,
                             std::optional<std::size_t> index,
                             const std::string& path) {
    std::string out(to_string(code));
    if (index) out += "(" + std::to_string(*index) + ")";
    if (!path.empty()) out += "(\"" + path + "\")";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::optional<std::size_t> index_;
  std::string path_;
};

}  // namespace derain
