#pragma once

#include "abflux/errors.hpp"
#include "abflux/expansion_fitter.hpp"
#include "abflux/flux_geometry.hpp"
#include "abflux/io.hpp"
#include "abflux/lattice.hpp"
#include "abflux/model_resolvent.hpp"
#include "abflux/parallel.hpp"
#include "abflux/quadrature.hpp"
#include "abflux/special_functions.hpp"
#include "abflux/wave_solver.hpp"
