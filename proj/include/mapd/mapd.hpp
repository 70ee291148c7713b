#pragma once

// Metadata archaeology via probe dynamics: record per-example loss
// trajectories during training, classify them against curated probe suites
// with k-NN, and apply the posteriors to label correction, prioritized batch
// selection, minority-group detection and dataset auditing.

#include "mapd/config.hpp"
#include "mapd/curve_store.hpp"
#include "mapd/dataset.hpp"
#include "mapd/error.hpp"
#include "mapd/experiments.hpp"
#include "mapd/model.hpp"
#include "mapd/probe_suite.hpp"
#include "mapd/rng.hpp"
#include "mapd/synthetic.hpp"
#include "mapd/tasks.hpp"
#include "mapd/train.hpp"
#include "mapd/trajectory_knn.hpp"
