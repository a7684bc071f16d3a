#pragma once

// Umbrella header for the inference and decision library. The CLI and the
// HTTP service (cli.hpp, service.hpp) are included separately.

#include "bayesdecide/analysis.hpp"
#include "bayesdecide/bootstrap.hpp"
#include "bayesdecide/experiment.hpp"
#include "bayesdecide/hier_prior.hpp"
#include "bayesdecide/io.hpp"
#include "bayesdecide/linalg.hpp"
#include "bayesdecide/posterior.hpp"
#include "bayesdecide/registry.hpp"
#include "bayesdecide/report.hpp"
#include "bayesdecide/risk.hpp"
#include "bayesdecide/rng.hpp"
#include "bayesdecide/simulation.hpp"
