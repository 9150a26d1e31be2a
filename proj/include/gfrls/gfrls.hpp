#pragma once

// Umbrella header for the generalized forgetting RLS toolkit.

#include "gfrls/config.hpp"
#include "gfrls/errors.hpp"
#include "gfrls/estimator.hpp"
#include "gfrls/excitation.hpp"
#include "gfrls/forgetting.hpp"
#include "gfrls/guarantees.hpp"
#include "gfrls/harness.hpp"
#include "gfrls/matrix.hpp"
#include "gfrls/report.hpp"
#include "gfrls/simulation.hpp"
#include "gfrls/trace_io.hpp"
