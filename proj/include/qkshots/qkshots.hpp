#pragma once

#include "qkshots/characteristics.hpp"
#include "qkshots/concentration_analysis.hpp"
#include "qkshots/dataset_pipeline.hpp"
#include "qkshots/errors.hpp"
#include "qkshots/feature_map.hpp"
#include "qkshots/kernels.hpp"
#include "qkshots/measurement_sim.hpp"
#include "qkshots/resource_model.hpp"
#include "qkshots/shot_estimator.hpp"
#include "qkshots/special_functions.hpp"
#include "qkshots/statevector.hpp"
#include "qkshots/statistics.hpp"
#include "qkshots/version.hpp"
