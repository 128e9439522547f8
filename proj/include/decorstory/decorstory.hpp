// Copyright (C) 2026 The decorstory authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "decorstory/analysis.hpp"
#include "decorstory/decorrelation.hpp"
#include "decorstory/embedding_io.hpp"
#include "decorstory/errors.hpp"
#include "decorstory/ipca.hpp"
#include "decorstory/layout.hpp"
#include "decorstory/matrix.hpp"
#include "decorstory/pipeline.hpp"
#include "decorstory/rng.hpp"
#include "decorstory/simd.hpp"
#include "decorstory/svr.hpp"
