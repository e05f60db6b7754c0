// Copyright 2026 The closematch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "closematch/dataset.hpp"
#include "closematch/error.hpp"
#include "closematch/eval.hpp"
#include "closematch/features.hpp"
#include "closematch/imaging.hpp"
#include "closematch/model_io.hpp"
#include "closematch/pipeline.hpp"
#include "closematch/rng.hpp"
#include "closematch/svm.hpp"
