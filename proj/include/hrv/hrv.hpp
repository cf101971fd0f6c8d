#pragma once

#include "hrv/dataset.hpp"
#include "hrv/errors.hpp"
#include "hrv/eval.hpp"
#include "hrv/features.hpp"
#include "hrv/io.hpp"
#include "hrv/models.hpp"
#include "hrv/peaks.hpp"
#include "hrv/rng.hpp"
#include "hrv/signal.hpp"
#include "hrv/synth.hpp"
#include "hrv/table.hpp"
