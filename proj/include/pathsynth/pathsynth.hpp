#pragma once

#include "pathsynth/copula.hpp"
#include "pathsynth/demo.hpp"
#include "pathsynth/error.hpp"
#include "pathsynth/generator.hpp"
#include "pathsynth/io.hpp"
#include "pathsynth/local_cdf.hpp"
#include "pathsynth/mf_transform.hpp"
#include "pathsynth/normal.hpp"
#include "pathsynth/rng.hpp"
#include "pathsynth/segmenter.hpp"
#include "pathsynth/three_sample.hpp"
#include "pathsynth/trace.hpp"
