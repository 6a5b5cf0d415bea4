#pragma once

#include "revo/config.hpp"
#include "revo/core_types.hpp"
#include "revo/dataset.hpp"
#include "revo/epipolar_angular.hpp"
#include "revo/estimator.hpp"
#include "revo/event_flow.hpp"
#include "revo/metrics.hpp"
#include "revo/pipeline.hpp"
#include "revo/radar_velocity.hpp"
#include "revo/simulator.hpp"
#include "revo/spline.hpp"
#include "revo/svg_plot.hpp"
