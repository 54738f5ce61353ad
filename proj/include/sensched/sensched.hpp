#pragma once

// Umbrella header.
#include "sensched/bench.hpp"
#include "sensched/bounds.hpp"
#include "sensched/conic.hpp"
#include "sensched/errors.hpp"
#include "sensched/io.hpp"
#include "sensched/ipm.hpp"
#include "sensched/linalg.hpp"
#include "sensched/model.hpp"
#include "sensched/parallel.hpp"
#include "sensched/relaxation.hpp"
#include "sensched/riccati.hpp"
#include "sensched/scheduler.hpp"
