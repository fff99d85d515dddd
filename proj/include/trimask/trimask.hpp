// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "trimask/candidate.hpp"
#include "trimask/config.hpp"
#include "trimask/error.hpp"
#include "trimask/fusion.hpp"
#include "trimask/kmeans1d.hpp"
#include "trimask/maskgrid.hpp"
#include "trimask/masks_io.hpp"
#include "trimask/pruner.hpp"
#include "trimask/report.hpp"
#include "trimask/rng.hpp"
#include "trimask/simulator.hpp"
#include "trimask/stage1.hpp"
#include "trimask/stage2.hpp"
#include "trimask/stage3.hpp"
#include "trimask/sweep.hpp"
#include "trimask/trace.hpp"
