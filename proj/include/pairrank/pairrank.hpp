#pragma once

#include "pairrank/prefcore.hpp"
#include "pairrank/flrmodel.hpp"
#include "pairrank/imcsolve.hpp"
#include "pairrank/rankagg.hpp"
#include "pairrank/pipeline.hpp"
#include "pairrank/io.hpp"
#include "pairrank/sweep.hpp"
