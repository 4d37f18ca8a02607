#pragma once

#include "deepmne/common.hpp"
#include "deepmne/constraint_set.hpp"
#include "deepmne/constraints.hpp"
#include "deepmne/diffusion.hpp"
#include "deepmne/evaluation.hpp"
#include "deepmne/graph_io.hpp"
#include "deepmne/json_io.hpp"
#include "deepmne/neural.hpp"
#include "deepmne/pipeline.hpp"
