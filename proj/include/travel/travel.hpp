#pragma once

#include "travel/attitude.hpp"
#include "travel/core.hpp"
#include "travel/io.hpp"
#include "travel/label_forest.hpp"
#include "travel/metrics.hpp"
#include "travel/pipeline.hpp"
#include "travel/spherical_clustering.hpp"
#include "travel/synth.hpp"
#include "travel/tgf_ground.hpp"
