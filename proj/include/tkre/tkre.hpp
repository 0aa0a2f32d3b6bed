#pragma once

// Umbrella header for the whole library.

#include "tkre/csv.hpp"
#include "tkre/dataset.hpp"
#include "tkre/ensemble.hpp"
#include "tkre/error.hpp"
#include "tkre/grid_config.hpp"
#include "tkre/harness.hpp"
#include "tkre/knn.hpp"
#include "tkre/matrix.hpp"
#include "tkre/metrics.hpp"
#include "tkre/model_io.hpp"
#include "tkre/parallel.hpp"
#include "tkre/report_io.hpp"
#include "tkre/rng.hpp"
#include "tkre/tweedie.hpp"
#include "tkre/version.hpp"
