// Umbrella header: the whole contractive-Markov-system laboratory.
#pragma once

#include "cms/builtins.hpp"
#include "cms/coding.hpp"
#include "cms/config.hpp"
#include "cms/csv.hpp"
#include "cms/errors.hpp"
#include "cms/graph.hpp"
#include "cms/markov_measure.hpp"
#include "cms/measure.hpp"
#include "cms/raster.hpp"
#include "cms/rng.hpp"
#include "cms/space.hpp"
#include "cms/system.hpp"
#include "cms/validation.hpp"
