#pragma once

#include "csbm/depth_predictor.hpp"
#include "csbm/empirics.hpp"
#include "csbm/errors.hpp"
#include "csbm/graph.hpp"
#include "csbm/io.hpp"
#include "csbm/matrix.hpp"
#include "csbm/params.hpp"
#include "csbm/propagation.hpp"
#include "csbm/rng.hpp"
#include "csbm/sampling.hpp"
#include "csbm/structure.hpp"
#include "csbm/theory.hpp"
#include "csbm/verify.hpp"
