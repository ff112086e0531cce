#pragma once

// Umbrella header.

#include "grnn/bench.hpp"
#include "grnn/checkpoint.hpp"
#include "grnn/error.hpp"
#include "grnn/experiment.hpp"
#include "grnn/gradcheck.hpp"
#include "grnn/graph_io.hpp"
#include "grnn/linkage.hpp"
#include "grnn/metrics.hpp"
#include "grnn/model.hpp"
#include "grnn/online.hpp"
#include "grnn/panel.hpp"
#include "grnn/simulator.hpp"
#include "grnn/text.hpp"
