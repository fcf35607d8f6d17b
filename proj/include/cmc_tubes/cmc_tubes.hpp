#pragma once

// Everything at once. Individual headers can be included on their own.

#include "cmc_tubes/error.hpp"
#include "cmc_tubes/fourier.hpp"
#include "cmc_tubes/model_metric.hpp"
#include "cmc_tubes/mode_decomposition.hpp"
#include "cmc_tubes/tube_geometry.hpp"
#include "cmc_tubes/jacobi_solvers.hpp"
#include "cmc_tubes/cmc_solver.hpp"
#include "cmc_tubes/spectral_index.hpp"
#include "cmc_tubes/measure_limits.hpp"
