#pragma once

#include "gemax/attention.hpp"
#include "gemax/core.hpp"
#include "gemax/error.hpp"
#include "gemax/map_apply.hpp"
#include "gemax/range_selection.hpp"
#include "gemax/solver.hpp"
