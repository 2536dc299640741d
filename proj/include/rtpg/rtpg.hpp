// Umbrella header.
#pragma once

#include "rtpg/beliefs.hpp"
#include "rtpg/equilibrium.hpp"
#include "rtpg/errors.hpp"
#include "rtpg/metrics.hpp"
#include "rtpg/model.hpp"
#include "rtpg/montecarlo.hpp"
#include "rtpg/network.hpp"
#include "rtpg/rng.hpp"
