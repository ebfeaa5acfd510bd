#pragma once

// Umbrella header for the avsig toolkit: antivirus signature normalization,
// engine/class indicator matrices, correlation-graph community detection,
// and per-category single-factor latent models with app scoring.

#include "avsig/clean.hpp"
#include "avsig/common.hpp"
#include "avsig/csv.hpp"
#include "avsig/default_rules.hpp"
#include "avsig/graph.hpp"
#include "avsig/hash.hpp"
#include "avsig/ingest.hpp"
#include "avsig/matrices.hpp"
#include "avsig/minhash.hpp"
#include "avsig/pipeline.hpp"
#include "avsig/rules.hpp"
#include "avsig/sem.hpp"
#include "avsig/synth.hpp"
#include "avsig/version.hpp"
