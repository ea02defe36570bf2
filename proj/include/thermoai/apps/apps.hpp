#pragma once

#include "thermoai/apps/anneal.hpp"
#include "thermoai/apps/common.hpp"
#include "thermoai/apps/diffusion.hpp"
#include "thermoai/apps/latent.hpp"
#include "thermoai/apps/nsde.hpp"
#include "thermoai/apps/samplers.hpp"
#include "thermoai/apps/targets.hpp"
