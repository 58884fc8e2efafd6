#pragma once

#include "saod/assignment.hpp"
#include "saod/augment.hpp"
#include "saod/dataset.hpp"
#include "saod/error.hpp"
#include "saod/eval.hpp"
#include "saod/geometry.hpp"
#include "saod/loss.hpp"
#include "saod/merge.hpp"
#include "saod/parallel.hpp"
#include "saod/random.hpp"
#include "saod/sim.hpp"
#include "saod/split.hpp"
