#pragma once

// Umbrella header: the exact F test for subsets of random effects in linear
// mixed models, its bootstrap counterparts, and the simulation harness.

#include "flcboot/bootstrap.hpp"
#include "flcboot/config.hpp"
#include "flcboot/distributions.hpp"
#include "flcboot/errors.hpp"
#include "flcboot/fdist.hpp"
#include "flcboot/flc_test.hpp"
#include "flcboot/harness.hpp"
#include "flcboot/projection.hpp"
#include "flcboot/rng.hpp"
#include "flcboot/scenarios.hpp"
