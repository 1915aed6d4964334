#pragma once

#include "pat/errors.hpp"
#include "pat/experiment.hpp"
#include "pat/fdtd.hpp"
#include "pat/fft.hpp"
#include "pat/grid.hpp"
#include "pat/inverse.hpp"
#include "pat/medium.hpp"
#include "pat/propagation.hpp"
#include "pat/spectral_core.hpp"
