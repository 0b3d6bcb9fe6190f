#pragma once

#include <hbt/analysis.hpp>
#include <hbt/cli.hpp>
#include <hbt/config.hpp>
#include <hbt/correlation.hpp>
#include <hbt/error.hpp>
#include <hbt/fit.hpp>
#include <hbt/io.hpp>
#include <hbt/montecarlo.hpp>
#include <hbt/permanent.hpp>
#include <hbt/physics.hpp>
#include <hbt/quadrature.hpp>
#include <hbt/random.hpp>
#include <hbt/sources.hpp>
#include <hbt/spectrum.hpp>
