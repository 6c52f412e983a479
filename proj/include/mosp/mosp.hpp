#pragma once

#include "mosp/box.hpp"
#include "mosp/distributed.hpp"
#include "mosp/errors.hpp"
#include "mosp/experiment.hpp"
#include "mosp/learner.hpp"
#include "mosp/metrics.hpp"
#include "mosp/network.hpp"
#include "mosp/odg.hpp"
#include "mosp/oracles.hpp"
#include "mosp/rng.hpp"
#include "mosp/scenario.hpp"
#include "mosp/solvers.hpp"
#include "mosp/validation.hpp"
