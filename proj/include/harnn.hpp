// Umbrella header: the whole engine in one include.
#pragma once

#include "harnn/matrix.hpp"
#include "harnn/numeric.hpp"
#include "harnn/rng.hpp"
#include "harnn/network.hpp"
#include "harnn/model_io.hpp"
#include "harnn/dataset.hpp"
#include "harnn/synth.hpp"
#include "harnn/evaluate.hpp"
#include "harnn/training.hpp"
#include "harnn/features.hpp"
#include "harnn/baseline.hpp"
#include "harnn/benchmark.hpp"
