// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "driftguard/adam.hpp"
#include "driftguard/checkpoint.hpp"
#include "driftguard/checksum.hpp"
#include "driftguard/config.hpp"
#include "driftguard/csv.hpp"
#include "driftguard/datagen.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/gradcheck.hpp"
#include "driftguard/metrics.hpp"
#include "driftguard/model.hpp"
#include "driftguard/objectives.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/sampler.hpp"
#include "driftguard/schedule.hpp"
#include "driftguard/sweep.hpp"
#include "driftguard/trainer.hpp"
