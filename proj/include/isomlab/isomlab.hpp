#pragma once

#include "errors.hpp"
#include "rng.hpp"
#include "geom.hpp"
#include "measures.hpp"
#include "harmonics.hpp"
#include "spectral.hpp"
#include "presets.hpp"
#include "digest.hpp"
#include "walk.hpp"
#include "selfsim.hpp"
#include "io.hpp"
