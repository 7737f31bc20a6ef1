#pragma once

// Umbrella header.

#include "karma/core.hpp"
#include "karma/csv.hpp"
#include "karma/datagen.hpp"
#include "karma/evaluation.hpp"
#include "karma/kernel.hpp"
#include "karma/learner.hpp"
#include "karma/model_io.hpp"
#include "karma/reference.hpp"
#include "karma/regularity.hpp"
#include "karma/subspace.hpp"
