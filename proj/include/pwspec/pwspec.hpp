#pragma once

#include "dynamics.hpp"
#include "ensemble.hpp"
#include "histogram.hpp"
#include "integrator.hpp"
#include "orbits.hpp"
#include "quadrature.hpp"
#include "quantum_state.hpp"
#include "random.hpp"
#include "spectra.hpp"
