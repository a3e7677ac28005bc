#pragma once

// Umbrella include for the whole library.

#include "hadtomo/matrix_core.hpp"
#include "hadtomo/channel.hpp"
#include "hadtomo/decoherence.hpp"
#include "hadtomo/tomography.hpp"
#include "hadtomo/io.hpp"
#include "hadtomo/pipeline.hpp"
