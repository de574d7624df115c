// Umbrella header.
#pragma once

#include "levyvol/asymptotics.hpp"
#include "levyvol/estimators.hpp"
#include "levyvol/harness.hpp"
#include "levyvol/kernels.hpp"
#include "levyvol/levy_models.hpp"
#include "levyvol/moment_maps.hpp"
#include "levyvol/quadrature.hpp"
#include "levyvol/rng.hpp"
#include "levyvol/stable.hpp"
