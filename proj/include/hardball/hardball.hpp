#pragma once

#include "hardball/numeric.hpp"
#include "hardball/linalg.hpp"
#include "hardball/geometry.hpp"
#include "hardball/atraj.hpp"
#include "hardball/ball_config.hpp"
#include "hardball/cone_billiard.hpp"
#include "hardball/simulator.hpp"
#include "hardball/io.hpp"
