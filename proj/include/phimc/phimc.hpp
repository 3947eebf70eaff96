#pragma once

#include "phimc/calibration.hpp"
#include "phimc/csv.hpp"
#include "phimc/dense.hpp"
#include "phimc/device_cell.hpp"
#include "phimc/drift.hpp"
#include "phimc/errors.hpp"
#include "phimc/experiments.hpp"
#include "phimc/photonic_array.hpp"
#include "phimc/profile.hpp"
#include "phimc/pulse.hpp"
#include "phimc/pulse_protocol.hpp"
#include "phimc/random.hpp"
#include "phimc/scalar_mult.hpp"
#include "phimc/solver.hpp"
#include "phimc/stats.hpp"
#include "phimc/stochastic.hpp"
#include "phimc/svg.hpp"
