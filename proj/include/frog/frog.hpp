#pragma once

// Umbrella header for the frog library: multi-tangent forward gradients,
// tangent sampling, benchmark optimization, and activity-perturbation
// network training.

#include "frog/adcore.hpp"
#include "frog/bench.hpp"
#include "frog/csv.hpp"
#include "frog/data.hpp"
#include "frog/errors.hpp"
#include "frog/fgrad.hpp"
#include "frog/harness.hpp"
#include "frog/nn.hpp"
#include "frog/presets.hpp"
#include "frog/rng.hpp"
#include "frog/tangent.hpp"
