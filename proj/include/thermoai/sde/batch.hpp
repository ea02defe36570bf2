#pragma once

// Batched integration lives with the scalar integrator.
#include "thermoai/sde/integrator.hpp"
