#pragma once

#include "gtd/chart.hpp"
#include "gtd/equilibrium.hpp"
#include "gtd/errors.hpp"
#include "gtd/expr.hpp"
#include "gtd/fieldeq.hpp"
#include "gtd/geodesic.hpp"
#include "gtd/jet.hpp"
#include "gtd/phase.hpp"
#include "gtd/rng.hpp"
#include "gtd/smallmat.hpp"
#include "gtd/system.hpp"
