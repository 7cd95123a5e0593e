#pragma once

#include "dysflux/error.hpp"
#include "dysflux/annotation.hpp"
#include "dysflux/timing.hpp"
#include "dysflux/phoneme.hpp"
#include "dysflux/manifest.hpp"
#include "dysflux/simulator.hpp"
#include "dysflux/tokenizer.hpp"
#include "dysflux/align.hpp"
#include "dysflux/metrics.hpp"
#include "dysflux/audio.hpp"
#include "dysflux/harness.hpp"
