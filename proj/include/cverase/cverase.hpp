#pragma once

#include "cverase/channel.hpp"
#include "cverase/errors.hpp"
#include "cverase/gaussian_state.hpp"
#include "cverase/measurement.hpp"
#include "cverase/metrics.hpp"
#include "cverase/montecarlo.hpp"
#include "cverase/operations.hpp"
#include "cverase/protocol.hpp"
