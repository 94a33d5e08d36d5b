#pragma once

#include "rrl/binary_io.hpp"
#include "rrl/divergences.hpp"
#include "rrl/dqn/adam.hpp"
#include "rrl/dqn/checkpoint.hpp"
#include "rrl/dqn/gradient_check.hpp"
#include "rrl/dqn/mlp.hpp"
#include "rrl/dqn/replay.hpp"
#include "rrl/dqn/trainer.hpp"
#include "rrl/emdp.hpp"
#include "rrl/emdp_io.hpp"
#include "rrl/environments.hpp"
#include "rrl/harness.hpp"
#include "rrl/random.hpp"
#include "rrl/rationality.hpp"
#include "rrl/solver.hpp"
