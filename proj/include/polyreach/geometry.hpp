#pragma once

// Polytope algebra on dense halfspace and vertex representations.

#include "polyreach/hull.hpp"
#include "polyreach/polytope.hpp"
#include "polyreach/setops.hpp"
