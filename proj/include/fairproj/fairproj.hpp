#pragma once

#include "fairproj/bias.hpp"
#include "fairproj/dataset.hpp"
#include "fairproj/errors.hpp"
#include "fairproj/fairpca.hpp"
#include "fairproj/io.hpp"
#include "fairproj/linalg.hpp"
#include "fairproj/metrics.hpp"
#include "fairproj/model_io.hpp"
#include "fairproj/multi_attr.hpp"
#include "fairproj/noise.hpp"
#include "fairproj/pipeline.hpp"
#include "fairproj/rng.hpp"
#include "fairproj/sweep.hpp"
#include "fairproj/synth.hpp"
