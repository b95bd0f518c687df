#pragma once

#include "thermoflock/error.hpp"
#include "thermoflock/matrix.hpp"
#include "thermoflock/state.hpp"
#include "thermoflock/topology.hpp"
#include "thermoflock/models.hpp"
#include "thermoflock/integrate.hpp"
#include "thermoflock/diagnostics.hpp"
#include "thermoflock/analysis.hpp"
#include "thermoflock/random.hpp"
#include "thermoflock/scenario.hpp"
#include "thermoflock/runner.hpp"
