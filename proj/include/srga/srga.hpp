#pragma once

// Umbrella header for the whole toolkit.

#include "srga/core.hpp"
#include "srga/degradation_spec.hpp"
#include "srga/degrade.hpp"
#include "srga/error.hpp"
#include "srga/featstore.hpp"
#include "srga/ggd.hpp"
#include "srga/image.hpp"
#include "srga/parallel.hpp"
#include "srga/pca.hpp"
#include "srga/pies.hpp"
#include "srga/probe_net.hpp"
#include "srga/rng.hpp"
#include "srga/sources.hpp"

namespace srga {
inline constexpr const char* kVersion = "0.1.0";
}
