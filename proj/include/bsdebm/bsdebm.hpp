#pragma once

#include "bsdebm/backend.hpp"
#include "bsdebm/claim.hpp"
#include "bsdebm/comparison.hpp"
#include "bsdebm/driver.hpp"
#include "bsdebm/driver_checks.hpp"
#include "bsdebm/errors.hpp"
#include "bsdebm/grid.hpp"
#include "bsdebm/lsmc_solver.hpp"
#include "bsdebm/markov_chain.hpp"
#include "bsdebm/oracles.hpp"
#include "bsdebm/path_engine.hpp"
#include "bsdebm/path_store.hpp"
#include "bsdebm/pde_solver.hpp"
#include "bsdebm/picard.hpp"
#include "bsdebm/problem.hpp"
#include "bsdebm/random.hpp"
#include "bsdebm/sublinear.hpp"
