#pragma once

#include "mctsdrive/errors.hpp"
#include "mctsdrive/frenet_map.hpp"
#include "mctsdrive/traffic_world.hpp"
#include "mctsdrive/cost_model.hpp"
#include "mctsdrive/mcts_planner.hpp"
#include "mctsdrive/scenarios.hpp"
#include "mctsdrive/eval_harness.hpp"
#include "mctsdrive/config_io.hpp"
#include "mctsdrive/trace_io.hpp"
