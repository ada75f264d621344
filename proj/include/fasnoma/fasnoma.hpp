#pragma once

#include "fasnoma/channel_model.hpp"
#include "fasnoma/config.hpp"
#include "fasnoma/errors.hpp"
#include "fasnoma/fas_distribution.hpp"
#include "fasnoma/gaussian_copula.hpp"
#include "fasnoma/monte_carlo.hpp"
#include "fasnoma/quadrature.hpp"
#include "fasnoma/rng.hpp"
#include "fasnoma/secrecy_metrics.hpp"
#include "fasnoma/special_functions.hpp"
#include "fasnoma/sweep.hpp"
