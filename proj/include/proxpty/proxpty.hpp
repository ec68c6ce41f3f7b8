#pragma once

// Umbrella header for the proxpty phase-retrieval library.

#include "proxpty/csvio.hpp"
#include "proxpty/data.hpp"
#include "proxpty/engines.hpp"
#include "proxpty/estimators.hpp"
#include "proxpty/fft.hpp"
#include "proxpty/field.hpp"
#include "proxpty/imageio.hpp"
#include "proxpty/metrics.hpp"
#include "proxpty/model.hpp"
#include "proxpty/parallel.hpp"
#include "proxpty/ptyx.hpp"
#include "proxpty/rng.hpp"
#include "proxpty/scan.hpp"
#include "proxpty/sim.hpp"

namespace proxpty {
inline constexpr const char* kVersion = "0.1.0";
}
