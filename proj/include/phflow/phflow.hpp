#pragma once

// Umbrella header: quadratic-form cone criterion for Jacobi dynamics,
// curvature model zoo, propagators, spectrum/cone estimators, and the
// experiment runner.

#include "phflow/errors.hpp"
#include "phflow/rng.hpp"
#include "phflow/parallel.hpp"
#include "phflow/models.hpp"
#include "phflow/dynamics.hpp"
#include "phflow/criterion.hpp"
#include "phflow/estimator.hpp"
#include "phflow/config.hpp"
#include "phflow/runner.hpp"
