#pragma once

#include "config.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "mlp.hpp"
#include "noise_matrix.hpp"
#include "normal.hpp"
#include "parallel.hpp"
#include "projection.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "stable.hpp"
#include "tail_index.hpp"
#include "univariate_tests.hpp"
