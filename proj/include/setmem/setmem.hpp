#pragma once

#include <setmem/analysis.hpp>
#include <setmem/checks.hpp>
#include <setmem/corrector.hpp>
#include <setmem/estimator.hpp>
#include <setmem/geometry.hpp>
#include <setmem/harness.hpp>
#include <setmem/predictor.hpp>
#include <setmem/sampling.hpp>
