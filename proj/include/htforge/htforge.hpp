#pragma once

#include "htforge/aig.hpp"
#include "htforge/benchgen.hpp"
#include "htforge/common.hpp"
#include "htforge/detect.hpp"
#include "htforge/equiv.hpp"
#include "htforge/netlist.hpp"
#include "htforge/npn.hpp"
#include "htforge/pca.hpp"
#include "htforge/prng.hpp"
#include "htforge/restructure.hpp"
#include "htforge/sat.hpp"
#include "htforge/trojan.hpp"
#include "htforge/truth_table.hpp"
