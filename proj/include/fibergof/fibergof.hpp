#pragma once

#include "fibergof/checked.hpp"
#include "fibergof/design_matrix.hpp"
#include "fibergof/errors.hpp"
#include "fibergof/fiber_oracle.hpp"
#include "fibergof/fiber_sampler.hpp"
#include "fibergof/gof_engine.hpp"
#include "fibergof/graph_tables.hpp"
#include "fibergof/lattice_moves.hpp"
#include "fibergof/mle_ipf.hpp"
#include "fibergof/model_zoo.hpp"
#include "fibergof/proposals.hpp"
#include "fibergof/simulate.hpp"
