#pragma once

#include "fvsr/errors.hpp"
#include "fvsr/rng.hpp"
#include "fvsr/model.hpp"
#include "fvsr/csv_io.hpp"
#include "fvsr/penalty.hpp"
#include "fvsr/solver.hpp"
#include "fvsr/baselines.hpp"
#include "fvsr/certify.hpp"
#include "fvsr/bench.hpp"
#include "fvsr/localize.hpp"
