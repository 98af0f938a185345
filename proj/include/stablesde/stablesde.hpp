#pragma once

// Everything in one include.

#include "stablesde/errors.hpp"
#include "stablesde/rng.hpp"
#include "stablesde/quadrature.hpp"
#include "stablesde/stats.hpp"
#include "stablesde/parallel.hpp"
#include "stablesde/io.hpp"
#include "stablesde/levy_measure.hpp"
#include "stablesde/drift.hpp"
#include "stablesde/simd_math.hpp"
#include "stablesde/stable_sampler.hpp"
#include "stablesde/sde_integrator.hpp"
#include "stablesde/resolvent_solver.hpp"
#include "stablesde/experiments.hpp"
