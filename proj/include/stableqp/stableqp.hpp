#pragma once

#include "stableqp/errors.hpp"
#include "stableqp/kkt.hpp"
#include "stableqp/linalg.hpp"
#include "stableqp/neighborhoods.hpp"
#include "stableqp/oracle.hpp"
#include "stableqp/params.hpp"
#include "stableqp/problem.hpp"
#include "stableqp/solver.hpp"
