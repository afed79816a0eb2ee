#pragma once

#include "bohmion/errors.hpp"
#include "bohmion/kernels.hpp"
#include "bohmion/ensemble.hpp"
#include "bohmion/pair_integrals.hpp"
#include "bohmion/potential.hpp"
#include "bohmion/integrators.hpp"
#include "bohmion/spectral.hpp"
#include "bohmion/qhd_reference.hpp"
#include "bohmion/bohmion_qhd.hpp"
#include "bohmion/electronic_model.hpp"
#include "bohmion/nonadiabatic.hpp"
#include "bohmion/geometry.hpp"
