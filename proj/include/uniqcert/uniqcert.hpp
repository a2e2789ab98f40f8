#pragma once

// Umbrella header.

#include "uniqcert/config.hpp"
#include "uniqcert/errors.hpp"
#include "uniqcert/experiments.hpp"
#include "uniqcert/features.hpp"
#include "uniqcert/findiff.hpp"
#include "uniqcert/grid.hpp"
#include "uniqcert/jacobian.hpp"
#include "uniqcert/parallel.hpp"
#include "uniqcert/rank.hpp"
#include "uniqcert/svg.hpp"
#include "uniqcert/synth.hpp"
#include "uniqcert/verdict.hpp"
