#pragma once

// Umbrella header for the whole library.

#include "mrgen/evolve.hpp"
#include "mrgen/exec_store.hpp"
#include "mrgen/inputgen.hpp"
#include "mrgen/interp.hpp"
#include "mrgen/mulang.hpp"
#include "mrgen/mutate.hpp"
#include "mrgen/pipeline.hpp"
#include "mrgen/rng.hpp"
#include "mrgen/transforms.hpp"
#include "mrgen/validate.hpp"
#include "mrgen/value.hpp"
