#pragma once

#include "spos/config.hpp"
#include "spos/csv.hpp"
#include "spos/diagnostics.hpp"
#include "spos/errors.hpp"
#include "spos/experiment.hpp"
#include "spos/kernel.hpp"
#include "spos/model.hpp"
#include "spos/parallel.hpp"
#include "spos/rng.hpp"
#include "spos/samplers.hpp"
#include "spos/serialize.hpp"
#include "spos/targets.hpp"
#include "spos/trace.hpp"
#include "spos/validation.hpp"
#include "spos/vr.hpp"
