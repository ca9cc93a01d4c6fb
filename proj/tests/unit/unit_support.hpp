// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gtest/gtest.h>

#include "test_support.hpp"

/// Asserts that `stmt` throws derain::Error with the given code.
#define EXPECT_DERAIN_ERROR(stmt, error_code)                                    \
  do {                                                                           \
    auto caught_ = ::derain::testing::catch_error([&] { (void)(stmt); });        \
    if (!caught_) {                                                              \
      ADD_FAILURE() << #stmt " did not throw derain::Error";                     \
    } else {                                                                     \
      EXPECT_EQ(caught_->code(), error_code) << caught_->what();                 \
    }                                                                            \
  } while (0)
