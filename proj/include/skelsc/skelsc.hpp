#pragma once

#include "skelsc/common.hpp"
#include "skelsc/covariance.hpp"
#include "skelsc/graph_clustering.hpp"
#include "skelsc/metrics.hpp"
#include "skelsc/pipeline.hpp"
#include "skelsc/self_expressive.hpp"
#include "skelsc/skeleton_data.hpp"
#include "skelsc/temporal_pruning.hpp"
#include "skelsc/tsc.hpp"
