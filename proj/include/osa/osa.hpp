#pragma once

#include "osa/bisect.hpp"
#include "osa/config.hpp"
#include "osa/gamma.hpp"
#include "osa/lp.hpp"
#include "osa/markov.hpp"
#include "osa/multichannel.hpp"
#include "osa/pomdp.hpp"
#include "osa/rng.hpp"
#include "osa/sensor.hpp"
#include "osa/separation.hpp"
#include "osa/sim.hpp"
