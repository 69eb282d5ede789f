#pragma once

#include "rsmooth/attack.hpp"
#include "rsmooth/bounds.hpp"
#include "rsmooth/classifier.hpp"
#include "rsmooth/io.hpp"
#include "rsmooth/models.hpp"
#include "rsmooth/noise.hpp"
#include "rsmooth/optimize.hpp"
#include "rsmooth/oracles.hpp"
#include "rsmooth/pipeline.hpp"
#include "rsmooth/report.hpp"
#include "rsmooth/smoothing.hpp"
#include "rsmooth/statfun.hpp"
#include "rsmooth/training.hpp"
