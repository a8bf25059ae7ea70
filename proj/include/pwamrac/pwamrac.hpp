#pragma once

// Umbrella header: adaptive model-reference control of piecewise affine
// systems with certified time-varying tracking bounds.

#include "pwamrac/adapt.hpp"
#include "pwamrac/certify.hpp"
#include "pwamrac/demo_scenarios.hpp"
#include "pwamrac/disturbance.hpp"
#include "pwamrac/envelope.hpp"
#include "pwamrac/io.hpp"
#include "pwamrac/linalg.hpp"
#include "pwamrac/lyapunov.hpp"
#include "pwamrac/pwa.hpp"
#include "pwamrac/region.hpp"
#include "pwamrac/scenario.hpp"
#include "pwamrac/signal.hpp"
#include "pwamrac/sim.hpp"
#include "pwamrac/sweep.hpp"
#include "pwamrac/types.hpp"
