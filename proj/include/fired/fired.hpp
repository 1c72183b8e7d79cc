#pragma once

#include "fired/core.hpp"
#include "fired/detectors.hpp"
#include "fired/ensemble.hpp"
#include "fired/error.hpp"
#include "fired/eval.hpp"
#include "fired/ingest.hpp"
#include "fired/mlp.hpp"
#include "fired/pipeline.hpp"
#include "fired/preprocess.hpp"
#include "fired/random.hpp"
#include "fired/rca.hpp"
#include "fired/serialize.hpp"
#include "fired/stats.hpp"
