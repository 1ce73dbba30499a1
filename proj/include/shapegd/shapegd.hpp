#pragma once

#include "shapegd/baselines.hpp"
#include "shapegd/config.hpp"
#include "shapegd/core.hpp"
#include "shapegd/detectors.hpp"
#include "shapegd/errors.hpp"
#include "shapegd/eval.hpp"
#include "shapegd/io.hpp"
#include "shapegd/neighborhoods.hpp"
#include "shapegd/rng.hpp"
#include "shapegd/shape.hpp"
#include "shapegd/simulator.hpp"
