#pragma once

#include "featrisk/asymptotics.hpp"
#include "featrisk/errors.hpp"
#include "featrisk/full_opt.hpp"
#include "featrisk/linalg.hpp"
#include "featrisk/model.hpp"
#include "featrisk/montecarlo.hpp"
#include "featrisk/parallel.hpp"
#include "featrisk/penalty.hpp"
#include "featrisk/predictor.hpp"
#include "featrisk/rng.hpp"
#include "featrisk/spectrum_opt.hpp"
#include "featrisk/upstream.hpp"
