// Copyright 2026 The derain3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "derain/annotate.hpp"
#include "derain/core.hpp"
#include "derain/error.hpp"
#include "derain/eval.hpp"
#include "derain/filters.hpp"
#include "derain/geometry.hpp"
#include "derain/io.hpp"
#include "derain/json_io.hpp"
#include "derain/pgm.hpp"
#include "derain/rainsim.hpp"
#include "derain/scene.hpp"
#include "derain/spatial_index.hpp"
