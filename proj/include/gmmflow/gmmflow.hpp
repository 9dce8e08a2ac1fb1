#pragma once

// Umbrella header.

#include "gmmflow/bench.hpp"
#include "gmmflow/bounds.hpp"
#include "gmmflow/errors.hpp"
#include "gmmflow/gaussian.hpp"
#include "gmmflow/io.hpp"
#include "gmmflow/mixture.hpp"
#include "gmmflow/path.hpp"
#include "gmmflow/quadrature.hpp"
#include "gmmflow/report.hpp"
#include "gmmflow/rng.hpp"
#include "gmmflow/scenarios.hpp"
#include "gmmflow/spd.hpp"
#include "gmmflow/trajectory.hpp"
