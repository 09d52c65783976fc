#pragma once

#include "hardylab/errors.hpp"
#include "hardylab/quadrature.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/specfun.hpp"
#include "hardylab/spectra.hpp"
#include "hardylab/radial_model.hpp"
#include "hardylab/counting.hpp"
#include "hardylab/strauss.hpp"
#include "hardylab/fractional1d.hpp"
#include "hardylab/cli_io.hpp"
