#pragma once

#include "scmp/model.hpp"
#include "scmp/world.hpp"
#include "scmp/reeds_shepp.hpp"
#include "scmp/search_single.hpp"
#include "scmp/search_coop.hpp"
#include "scmp/conflict_tree.hpp"
#include "scmp/metrics.hpp"
#include "scmp/bench.hpp"
#include "scmp/audit.hpp"
#include "scmp/io.hpp"
#include "scmp/svg.hpp"
