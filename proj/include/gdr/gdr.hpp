#pragma once

#include "gdr/denoise.hpp"
#include "gdr/guidance.hpp"
#include "gdr/harness.hpp"
#include "gdr/image.hpp"
#include "gdr/metrics.hpp"
#include "gdr/operators.hpp"
#include "gdr/png_io.hpp"
#include "gdr/projector.hpp"
#include "gdr/resample.hpp"
#include "gdr/rng.hpp"
#include "gdr/sampler.hpp"
#include "gdr/schedule.hpp"
#include "gdr/selftest.hpp"
#include "gdr/version.hpp"
