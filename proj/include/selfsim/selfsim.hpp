#pragma once

// Umbrella header for the whole library.

#include "affine.hpp"
#include "chain.hpp"
#include "continuum.hpp"
#include "dimension.hpp"
#include "dispersion.hpp"
#include "field.hpp"
#include "fourier.hpp"
#include "io.hpp"
#include "laplacian.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "probe.hpp"
#include "quadrature.hpp"
#include "simulate.hpp"
#include "version.hpp"
