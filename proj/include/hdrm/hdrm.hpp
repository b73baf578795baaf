#pragma once

#include "hdrm/adapt.hpp"
#include "hdrm/bench.hpp"
#include "hdrm/config.hpp"
#include "hdrm/drm.hpp"
#include "hdrm/errors.hpp"
#include "hdrm/fem.hpp"
#include "hdrm/hybrid.hpp"
#include "hdrm/linalg.hpp"
#include "hdrm/mesh.hpp"
#include "hdrm/newton.hpp"
#include "hdrm/problem.hpp"
#include "hdrm/quadrature.hpp"
