#pragma once

#include "remest/codec.hpp"
#include "remest/counterexample.hpp"
#include "remest/dp.hpp"
#include "remest/error.hpp"
#include "remest/numerics.hpp"
#include "remest/sim.hpp"
#include "remest/sources.hpp"
#include "remest/stage.hpp"
#include "remest/version.hpp"
